"""Trace tables and convergence diagnostics for representation families.

For every ball word and member index the trace is computed at working
precision; the per-index delta is the minimal valuation of the trace
difference against the limit.  Verdicts are ball-level certifications
only and every report records the radius, index range, and thresholds
that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, StageError
from .families import LIMIT, RepFamily
from .field import INF, PadicScalar, delta_vpi
from .reporting import TailCertificate, TailPolicy, certify_tail, fmt_val
from .words import WordBall, format_word


@dataclass(frozen=True)
class TraceTable:
    """Traces of all ball words for each member index and the limit."""

    family: RepFamily
    ball: WordBall
    n_range: tuple[int, ...]
    values: dict  # word -> {n: scalar, LIMIT: scalar}

    def trace(self, word, idx) -> PadicScalar:
        return self.values[word][idx]


def trace_table(fam: RepFamily, L: int, n_range) -> TraceTable:
    """Exhaustive ball traces; evaluation errors carry word attribution."""
    ns = tuple(n_range)
    if not ns:
        raise ConfigError("empty index range")
    ball = fam.ball(L)
    values = {}
    for w in ball:
        row = {}
        for idx in ns + (LIMIT,):
            try:
                row[idx] = fam.eval(idx, w).trace()
            except Exception as ex:  # attribute failures to the word
                raise StageError(f"trace-eval[{format_word(w)}, n={idx}]", ex) \
                    from ex
        values[w] = row
    return TraceTable(fam, ball, ns, values)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-word and ball-minimum trace deltas with tail certification.

    ``delta[i]`` is min over ball words of v(tr rho_n(w) - tr rho_lim(w))
    at n = n_range[i]; INF means exact agreement on the whole ball.
    Saturated entries (difference vanishing at working precision without
    being exactly zero) are counted separately.
    """

    L: int
    n_range: tuple[int, ...]
    delta: tuple
    per_word: dict
    monotone_tail: int
    uniform_cert: TailCertificate
    trace_convergent_on_ball: bool
    uniform_on_ball: bool
    dimension_ok: bool
    saturated_count: int
    policy: TailPolicy

    def to_json_dict(self) -> dict:
        return {
            "ball_radius": self.L,
            "n_range": list(self.n_range),
            "delta": [fmt_val(v) for v in self.delta],
            "per_word": {format_word(w): [fmt_val(v) for v in vs]
                         for w, vs in self.per_word.items()},
            "monotone_tail": self.monotone_tail,
            "uniform_certificate": self.uniform_cert.to_json_dict(),
            "verdicts": {
                "trace_convergent_on_ball": self.trace_convergent_on_ball,
                "uniform_on_ball": self.uniform_on_ball,
            },
            "dimension_check": self.dimension_ok,
            "saturated_count": self.saturated_count,
            "thresholds": {
                "delta_threshold": fmt_val(self.policy.threshold),
                "tail_fraction": fmt_val(self.policy.tail_fraction),
            },
        }

    def csv_rows(self):
        return [(n, fmt_val(d)) for n, d in zip(self.n_range, self.delta)]


def convergence_report(table: TraceTable,
                       policy: TailPolicy = TailPolicy()) -> ConvergenceReport:
    """Assemble deltas and ball-level verdicts from a trace table."""
    ns = table.n_range
    per_word = {}
    saturated = 0
    for w, row in table.values.items():
        lim = row[LIMIT]
        deltas = []
        for n in ns:
            v, sat = delta_vpi(row[n], lim)
            if sat:
                saturated += 1
            deltas.append(v if v is INF else Fraction(v, lim.field.e))
        per_word[w] = tuple(deltas)
    delta = tuple(min(per_word[w][i] for w in table.values)
                  for i in range(len(ns)))
    uniform_cert = certify_tail(delta, policy)
    word_certs = [certify_tail(vs, policy) for vs in per_word.values()]
    conv = all(c.passes for c in word_certs)
    dim_ok = pseudochar_dimension_check(table, table.family.d)
    return ConvergenceReport(
        L=table.ball.radius,
        n_range=ns,
        delta=delta,
        per_word=per_word,
        monotone_tail=uniform_cert.monotone_tail,
        uniform_cert=uniform_cert,
        trace_convergent_on_ball=conv,
        uniform_on_ball=uniform_cert.passes,
        dimension_ok=dim_ok,
        saturated_count=saturated,
        policy=policy,
    )


def pseudochar_dimension_check(table: TraceTable, d: int) -> bool:
    """The limit trace at the empty word must equal d exactly (the
    dimension congruence has a unique solution in characteristic zero)."""
    t = table.values[()][LIMIT]
    return (t - t.field.from_int(d)).is_zero_to_prec
