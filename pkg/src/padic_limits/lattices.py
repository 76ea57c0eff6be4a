"""Stable-lattice criteria, orbit-saturation search, and lattice
transfer along a uniformly convergent family.

A lattice is stored by an invertible basis matrix whose columns span it
over the valuation ring.  Saturation starts from the standard lattice,
adjoins generator images of the current basis, and re-extracts a basis
by unimodular column reduction; nonexistence is only ever reported as
budget exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, NegativeVerdict, PrecisionError, StageError, \
    UnboundedLatticeError
from .families import LIMIT, RepFamily
from .field import INF, FieldSpec, PadicScalar, delta_vpi
from .matrices import PadicMatrix, smith_form
from .reporting import TailCertificate, TailPolicy, certify_tail, fmt_val


@dataclass(frozen=True)
class LatticeBasis:
    """Basis of a stable lattice plus its position versus the standard
    lattice and the stability certificate (worst negative valuation of
    conjugated generator entries; 0 for a stable lattice)."""

    basis: PadicMatrix
    smith_invariants: tuple[int, ...]
    stability_certificate: Fraction

    def to_json_dict(self) -> dict:
        from .reporting import fmt_val as f

        return {
            "smith_invariants": list(self.smith_invariants),
            "stability_certificate": f(self.stability_certificate),
        }


@dataclass(frozen=True)
class CriteriaReport:
    """Ball-checked sufficiency flags for stable-lattice existence.

    ``bounded_image`` is a heuristic (entry valuations stop dropping when
    the radius grows); ``integral_traces`` is exact on the ball;
    ``residually_irreducible_trace`` uses the mod-pi Gram certificate and
    is None when the family is not integral.
    """

    bounded_image: bool
    integral_traces: bool
    residually_irreducible_trace: bool | None
    L: int

    def to_json_dict(self) -> dict:
        return {
            "bounded_image": self.bounded_image,
            "integral_traces": self.integral_traces,
            "residually_irreducible_trace": self.residually_irreducible_trace,
            "ball_radius": self.L,
            "caveat": "ball-level checks only",
        }


def lattice_criteria(fam: RepFamily, idx, L: int) -> CriteriaReport:
    """Evaluate the three sufficiency criteria on the word ball."""
    if L < 2:
        raise ConfigError("criteria need ball radius >= 2")
    minval_L = min(fam.eval(idx, w).min_valuation() for w in fam.ball(L))
    minval_prev = min(fam.eval(idx, w).min_valuation()
                      for w in fam.ball(L - 1))
    bounded = minval_L >= minval_prev
    integral = all(fam.eval(idx, w).trace().vmin_pi >= 0 for w in fam.ball(L))
    residual = None
    if minval_L >= 0:
        residual = _residual_gram_certificate(fam, idx, L)
    return CriteriaReport(bounded, integral, residual, L)


def _residual_gram_certificate(fam: RepFamily, idx, L: int) -> bool:
    """Greedy mod-pi Gram search over the ball: True when d^2 words give
    a unit Gram determinant in the residue field."""
    p = fam.field.p
    d = fam.d
    need = d * d
    chosen: list[list[list[int]]] = []
    for w in fam.ball(L):
        M = fam.eval(idx, w).residue_rows()
        cand = chosen + [M]
        G = [[_tr_prod_mod(A, B, p) for B in cand] for A in cand]
        if _rank_mod(G, p) == len(cand):
            chosen = cand
            if len(chosen) == need:
                return True
    return False


def _tr_prod_mod(A, B, p: int) -> int:
    d = len(A)
    return sum(A[i][j] * B[j][i] for i in range(d) for j in range(d)) % p


def _rank_mod(G, p: int) -> int:
    a = [row[:] for row in G]
    n = len(a)
    rank = 0
    for col in range(n):
        piv = next((r for r in range(rank, n) if a[r][col] % p), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][col], -1, p)
        a[rank] = [x * inv % p for x in a[rank]]
        for r in range(n):
            if r != rank and a[r][col] % p:
                f = a[r][col]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


def _column_reduce(field: FieldSpec, cols) -> list[list[PadicScalar]]:
    """Unimodular column reduction of a spanning set: returns d basis
    columns generating the same module over the valuation ring."""
    d = len(cols[0])
    work = [list(c) for c in cols]
    pivots = []
    used = set()
    for row in range(d):
        best, best_v = None, INF
        for j in range(len(work)):
            if j in used:
                continue
            v = work[j][row].vmin_pi
            if v < best_v:
                best, best_v = j, v
        if best is None or best_v is INF:
            continue
        used.add(best)
        pivots.append(best)
        piv = work[best][row]
        for j in range(len(work)):
            if j == best or work[j][row].is_zero_to_prec:
                continue
            f = work[j][row] / piv  # integral: pivot has minimal valuation
            work[j] = [x - f * y for x, y in zip(work[j], work[best])]
    basis = [work[j] for j in pivots]
    if len(basis) != d:
        raise PrecisionError("spanning set lost rank during reduction")
    return basis


def _lattice_contains(basis_inv: PadicMatrix, vec) -> bool:
    return all(c.vmin_pi >= 0 for c in basis_inv.mul_vector(vec))


def _negative_part(M: PadicMatrix) -> Fraction:
    v = M.min_valuation()
    if v is INF or v >= 0:
        return Fraction(0)
    return Fraction(-v, M.field.e)


def stability_certificate(fam: RepFamily, idx, basis: PadicMatrix) -> Fraction:
    """Max over generators g (and inverses) of the negative part of
    valuations of basis^-1 rho(g) basis; 0 certifies stability."""
    binv = basis.inverse()
    worst = Fraction(0)
    for g in list(fam.generator_matrices(idx)) + list(fam.generator_inverses(idx)):
        worst = max(worst, _negative_part(binv @ g @ basis))
    return worst


def find_stable_lattice(fam: RepFamily, idx, L: int = 3, max_iter: int = 64,
                        max_drop: int | None = None) -> LatticeBasis:
    """Orbit saturation from the standard lattice.

    Terminates with a stable basis, or raises UnboundedLatticeError when
    invariant valuations drop below -max_drop (default 2*d*e digits) or
    the iteration budget is exhausted; that outcome is consistent with
    nonexistence but proves nothing.
    """
    f = fam.field
    d = fam.d
    if max_drop is None:
        max_drop = 2 * d * f.e
    crit = lattice_criteria(fam, idx, max(L, 2))
    if not crit.integral_traces:
        import warnings

        warnings.warn("traces are not integral on the ball; "
                      "a stable lattice is unlikely", stacklevel=2)
    basis = PadicMatrix.identity(f, d)
    gens = list(fam.generator_matrices(idx)) + list(fam.generator_inverses(idx))
    for it in range(max_iter):
        binv = basis.inverse()
        cols = [basis.column(j) for j in range(d)]
        new_cols = []
        stationary = True
        for g in gens:
            for c in cols:
                img = g.mul_vector(c)
                new_cols.append(img)
                if stationary and not _lattice_contains(binv, img):
                    stationary = False
        if stationary:
            ks, _, _ = smith_form(basis)
            return LatticeBasis(basis, tuple(ks),
                                stability_certificate(fam, idx, basis))
        basis = PadicMatrix(f, zip(*_column_reduce(f, cols + new_cols)))
        ks, _, _ = smith_form(basis)
        if min(ks) < -max_drop:
            raise UnboundedLatticeError(
                f"invariant valuations fell below -{max_drop}; "
                "no stable lattice found at this budget",
                rounds=it + 1, worst_valuation=min(ks))
    raise UnboundedLatticeError(
        f"no stationary lattice within {max_iter} rounds",
        rounds=max_iter, worst_valuation=None)


@dataclass(frozen=True)
class TransferReport:
    """Lattice transfer along the family: first index N0 from which all
    ball-word entries are integral in the limit-lattice basis."""

    N0: int
    limit_basis: LatticeBasis
    per_n: dict  # n -> LatticeBasis | None
    n_range: tuple[int, ...]
    L: int
    convergence_cert: TailCertificate

    def to_json_dict(self) -> dict:
        return {
            "N0": self.N0,
            "ball_radius": self.L,
            "n_range": list(self.n_range),
            "limit_basis": self.limit_basis.to_json_dict(),
            "per_n": {str(n): (b.to_json_dict() if b else None)
                      for n, b in sorted(self.per_n.items())},
            "uniform_precheck": self.convergence_cert.to_json_dict(),
        }


def transfer_lattice(fam: RepFamily, L: int, n_range,
                     policy: TailPolicy = TailPolicy(),
                     max_iter: int = 64) -> TransferReport:
    """Move the limit's stable lattice to the members.

    Precondition (checked as a ball certification): the family converges
    entrywise in its given frame.  The members are conjugated into the
    limit lattice basis; N0 is the first index from which every ball
    word has integral entries.
    """
    ns = tuple(n_range)
    ball = fam.ball(L)
    lim_mats = {w: fam.eval(LIMIT, w) for w in ball}
    deltas = []
    e = fam.field.e
    for n in ns:
        worst = INF
        for w in ball:
            A = fam.eval(n, w)
            B = lim_mats[w]
            for i in range(fam.d):
                for j in range(fam.d):
                    v, _ = delta_vpi(A.rows[i][j], B.rows[i][j])
                    worst = min(worst, v)
        deltas.append(worst if worst is INF else Fraction(worst, e))
    cert = certify_tail(deltas, policy)
    if not cert.passes:
        raise StageError(
            "uniform-physical-precheck",
            PrecisionError("entrywise convergence in the given frame was "
                           "not certified: " + str(cert.to_json_dict())))
    try:
        lim_basis = find_stable_lattice(fam, LIMIT, L, max_iter)
    except NegativeVerdict as ex:
        raise StageError("limit-lattice", ex)
    P = lim_basis.basis
    Pinv = P.inverse()
    integral = {}
    for n in ns:
        integral[n] = all((Pinv @ fam.eval(n, w) @ P).min_valuation() >= 0
                          for w in ball)
    N0 = None
    for pos, n in enumerate(ns):
        if all(integral[m] for m in ns[pos:]):
            N0 = n
            break
    if N0 is None:
        raise StageError(
            "transfer", PrecisionError(
                "no index from which all ball entries are integral"))
    per_n = {}
    for n in ns:
        if n >= N0:
            per_n[n] = LatticeBasis(P, lim_basis.smith_invariants,
                                    stability_certificate(fam, n, P))
        else:
            per_n[n] = None
    return TransferReport(N0, lim_basis, per_n, ns, L, cert)
