"""Exception hierarchy shared across the toolkit.

Errors split into three families: operational misuse (bad config, bad
input), precision failures (a result cannot be certified at the working
precision), and negative verdicts (the computation succeeded and the
mathematical answer is "no").  The CLI maps these to distinct exit codes.
"""


class PadicError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PadicError):
    """Invalid parameters, malformed input files, or grammar violations."""


class PrecisionError(PadicError):
    """A value or pivot is indistinguishable from zero at working precision."""


class PrecisionExhaustedError(PrecisionError):
    """Tracked absolute precision dropped to zero digits."""


class UndecidableError(PrecisionError):
    """A strict valuation comparison cannot be settled at working precision."""


class RankDeficiencyError(PrecisionError):
    """Elimination met a pivot indistinguishable from zero."""


class NegativeVerdict(PadicError):
    """Computation finished; the mathematical verdict is negative."""

    stage: str = ""


class NoCertificateError(NegativeVerdict):
    """Greedy Gram search stopped below full rank.

    Consistent with reducibility at the given precision and word-ball
    radius; carries the maximal rank reached.
    """

    def __init__(self, max_rank: int, needed: int, index=None):
        self.max_rank = max_rank
        self.needed = needed
        self.index = index
        self.stage = "irreducibility-certificate"
        where = "limit" if index is None else f"member n={index}"
        super().__init__(
            f"no irreducibility certificate for {where}: rank {max_rank} < {needed}"
        )


class NoSeparatingWordError(NegativeVerdict):
    """No ball word splits the limit spectrum into the requested blocks."""

    def __init__(self, message: str):
        self.stage = "block-idempotents"
        super().__init__(message)


class CoercivityError(NegativeVerdict):
    """Off-diagonal coercivity could not be certified as increasing."""

    def __init__(self, message: str):
        self.stage = "rebalance"
        super().__init__(message)


class UnboundedLatticeError(NegativeVerdict):
    """Orbit saturation exhausted its budget without stabilizing.

    Consistent with nonexistence of a stable lattice, but not a proof.
    """

    def __init__(self, message: str, rounds: int, worst_valuation):
        self.stage = "lattice-saturation"
        self.rounds = rounds
        self.worst_valuation = worst_valuation
        super().__init__(message)


class StageError(NegativeVerdict):
    """Wraps a failure with the pipeline stage that produced it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
