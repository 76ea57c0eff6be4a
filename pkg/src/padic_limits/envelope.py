"""Component-order bounds and thin-set density machinery.

Covers: the two-part bound on orders of roots of unity generated by
eigenvalues of a matrix with integral symmetric functions; exhaustive
detection of bounded-order unit relations among eigenvalues; membership
in tubular neighborhoods of characteristic subvarieties (conjugation
invariance is structural, the defining polynomials see only
characteristic-polynomial data); and seeded Monte Carlo estimates of
tubular measures with Wilson intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, UndecidableError
from .families import LIMIT, RepFamily, haar_parameters, parse_expr
from .field import INF, FieldSpec, PadicScalar
from .matrices import CharPolyData, PadicMatrix, charpoly
from .reporting import fmt_val

# -- root-of-unity order bounds -------------------------------------------------


@dataclass(frozen=True)
class RootOfUnityBound:
    """Order bound split into a prime-to-p part and a p-power part."""

    p: int
    f: int
    e: int
    d: int
    prime_to_p_bound: int
    p_power_bound: int

    @property
    def combined(self) -> int:
        return self.prime_to_p_bound * self.p_power_bound

    def to_json_dict(self) -> dict:
        return {
            "p": self.p, "f": self.f, "e": self.e, "d": self.d,
            "prime_to_p_bound": self.prime_to_p_bound,
            "p_power_bound": self.p_power_bound,
            "combined": self.combined,
        }


def root_of_unity_order_bound(p: int, f: int, e: int, d: int) -> RootOfUnityBound:
    """Bound the order of a root of unity lying in the group generated by
    eigenvalues of a d-dimensional matrix over a local field with residue
    degree f and ramification e.

    Prime-to-p part: a monic degree-d! equation over the residue field of
    size p**f traps the reduction in a field of size at most p**(f d!),
    so the order divides p**(f d!) - 1.  p-power part: order p**k is
    impossible once p**k - p**(k-1) exceeds e d!.
    """
    if p < 3 or f < 1 or e < 1 or d < 1:
        raise ConfigError("need odd p and f, e, d >= 1")
    dfact = math.factorial(d)
    prime_to_p = p ** (f * dfact) - 1
    k = 0
    while p ** (k + 1) - p ** k <= e * dfact:
        k += 1
    return RootOfUnityBound(p, f, e, d, prime_to_p, p ** k)


# -- eigenvalue unit relations ----------------------------------------------------


@dataclass(frozen=True)
class UnitRelation:
    """Exponent vector a with prod lambda_i**a_i a primitive root of
    unity of the recorded order (>= 2)."""

    exponents: tuple[int, ...]
    order: int


def _validate_order_cap(field: FieldSpec, B: int) -> None:
    # separating roots of unity of order <= B needs B < p**(prec/(2e))
    if B >= field.p ** (field.prec / (2 * field.e)):
        raise ConfigError(
            f"order cap {B} too large for precision {field.prec} "
            f"(needs B < p**(prec/2e))")


def _is_one(x: PadicScalar) -> bool:
    return (x - x.field.one()).is_zero_to_prec


def eigenvalue_unit_relation(M: PadicMatrix, A: int, B: int) -> list[UnitRelation]:
    """Exhaustive scan over exponent vectors with |a_i| <= A for products
    of eigenvalues that are roots of unity of order 2..B at working
    precision; results in lexicographic exponent order."""
    if A < 1 or B < 1:
        raise ConfigError("exponent and order caps must be >= 1")
    _validate_order_cap(M.field, B)
    eigen = charpoly(M).eigen_data
    if eigen is None:
        raise UndecidableError(
            "eigenvalues unavailable: characteristic polynomial does not "
            "split over the working field")
    lams = []
    for ev, mult in eigen:
        lams.extend([ev] * mult)
    out = []
    from itertools import product as iproduct

    for a in iproduct(range(-A, A + 1), repeat=len(lams)):
        if all(x == 0 for x in a):
            continue
        val = sum(x * l.vmin_pi for x, l in zip(a, lams))
        if val != 0:
            continue
        zeta = M.field.one()
        for x, l in zip(a, lams):
            if x:
                zeta = zeta * l ** x
        order = _root_of_unity_order(zeta, B)
        if order is not None and order >= 2:
            out.append(UnitRelation(tuple(a), order))
    return out


def _root_of_unity_order(zeta: PadicScalar, B: int) -> int | None:
    """Smallest m <= B with zeta**m = 1 at working precision."""
    if zeta.vmin_pi != 0:
        return None
    pw = zeta
    for m in range(1, B + 1):
        if _is_one(pw):
            return m
        pw = pw * zeta
    return None


# -- tubular membership -------------------------------------------------------------

_SUBVARIETY_KEYS = {"polys", "m"}


@dataclass(frozen=True)
class SubvarietySpec:
    """Conjugation-invariant locus: polynomials in c_0..c_{d-1} (ascending
    characteristic-polynomial coefficients), det_inv, and disc, plus a
    tubular radius m."""

    polys: tuple  # parsed ASTs
    texts: tuple[str, ...]
    m: int

    @classmethod
    def from_json_dict(cls, doc: dict) -> SubvarietySpec:
        unknown = set(doc) - _SUBVARIETY_KEYS
        if unknown:
            raise ConfigError(f"unknown subvariety keys: {sorted(unknown)}")
        texts = tuple(doc["polys"])
        if not texts:
            raise ConfigError("subvariety needs at least one polynomial")
        return cls(tuple(_parse_poly(t) for t in texts), texts,
                   int(doc["m"]))


def _parse_poly(text: str):
    # reuse the family expression parser; variables are validated on use
    return parse_expr(text)


def _poly_vars(node, out: set):
    if node[0] == "var":
        out.add(node[1])
    for c in node[1:]:
        if isinstance(c, tuple):
            _poly_vars(c, out)
    return out


def eval_invariant_poly(node, cp: CharPolyData) -> PadicScalar:
    """Evaluate a subvariety polynomial on characteristic-polynomial
    data."""
    f = cp.field
    kind = node[0]
    if kind == "int":
        return f.from_int(node[1])
    if kind == "neg":
        return -eval_invariant_poly(node[1], cp)
    if kind == "var":
        name = node[1]
        if name == "disc":
            return cp.disc
        if name == "det_inv":
            return cp.det().inverse()
        if name.startswith("c") and name[1:].isdigit():
            i = int(name[1:])
            if 0 <= i < cp.d:
                return cp.coeffs[i]
        raise ConfigError(f"unknown subvariety variable {name!r}")
    if kind in ("add", "sub", "mul", "div"):
        a = eval_invariant_poly(node[1], cp)
        b = eval_invariant_poly(node[2], cp)
        if kind == "add":
            return a + b
        if kind == "sub":
            return a - b
        if kind == "mul":
            return a * b
        return a / b
    if kind == "pow":
        from .families import _eval_exact, _Ctx

        expo = _eval_exact(node[2], _Ctx(None, None, None, {}))
        if expo.denominator != 1:
            raise ConfigError("pow exponent must be an integer")
        return eval_invariant_poly(node[1], cp) ** int(expo)
    raise ConfigError(f"operator {kind!r} not allowed in subvariety polynomials")


def tubular_member(M: PadicMatrix, X: SubvarietySpec,
                   cp: CharPolyData | None = None) -> bool:
    """True when every defining polynomial has valuation strictly greater
    than m on M's characteristic-polynomial data.

    Raises UndecidableError when a value vanishes at a working precision
    that cannot settle the strict comparison.
    """
    if cp is None:
        cp = charpoly(M)
    e = M.field.e
    for text, node in zip(X.texts, X.polys):
        val = eval_invariant_poly(node, cp)
        if val.is_exact_zero:
            continue
        v = Fraction(val.vpi, e)
        if val.is_zero_to_prec:
            if v > X.m:
                continue
            raise UndecidableError(
                f"cannot decide v({text}) > {X.m}: value vanishes at "
                f"precision {val.prec} pi-digits")
        if not v > X.m:
            return False
    return True


# -- thin-set density ------------------------------------------------------------------

_WILSON_Z99 = 2.5758293035489004  # two-sided 99% normal quantile


def wilson_interval(hits: int, n: int, z: float = _WILSON_Z99):
    """99% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ConfigError("need a positive sample count")
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n
                                   + z * z / (4.0 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class DensityEstimate:
    """Monte Carlo estimate of one tubular level's Haar measure."""

    m: int
    samples: int
    hits: int
    undecidable: int
    seed: object
    level: int

    @property
    def estimate(self) -> float:
        return self.hits / self.samples

    @property
    def wilson(self):
        return wilson_interval(self.hits, self.samples)

    def to_json_dict(self) -> dict:
        lo, hi = self.wilson
        return {
            "m": self.m,
            "samples": self.samples,
            "hits": self.hits,
            "undecidable": self.undecidable,
            "estimate": repr(self.estimate),
            "wilson_99": [repr(lo), repr(hi)],
            "seed": str(self.seed),
            "level": self.level,
        }


def thin_density(fam: RepFamily, X: SubvarietySpec, m_list, samples: int,
                 seed, level: int | None = None,
                 idx=LIMIT) -> list[DensityEstimate]:
    """Estimate tubular-neighborhood measures at each radius in m_list.

    Exact Haar sampling requires a parametric-abelian family; one sample
    stream serves every radius, so the estimates are exactly monotone
    nonincreasing in m.  Precision-undecidable memberships are counted
    per level and must be zero for a valid run.
    """
    if samples <= 0:
        raise ConfigError("need a positive number of samples")
    if not fam.parametric:
        raise ConfigError(
            "thin_density requires exact Haar sampling; the family is not "
            "parametric-abelian")
    ms = sorted(set(int(m) for m in m_list))
    if not ms:
        raise ConfigError("need at least one tubular radius")
    f = fam.field
    if level is None:
        level = max(1, -(-f.prec // f.e))
    hits = {m: 0 for m in ms}
    undec = {m: 0 for m in ms}
    for z in haar_parameters(fam, seed, samples, level):
        M = fam.param_matrix(idx, z)
        cp = charpoly(M)
        # one pass per sample: the smallest exact valuation decides misses,
        # the smallest precision bound marks undecidable radii
        min_exact = INF
        min_bound = INF
        for node in X.polys:
            val = eval_invariant_poly(node, cp)
            if val.is_exact_zero:
                continue
            v = Fraction(val.vpi, f.e)
            if val.is_zero_to_prec:
                min_bound = min(min_bound, v)
            else:
                min_exact = min(min_exact, v)
        for m in ms:
            if min_exact <= m:
                continue  # some polynomial certainly fails v > m
            if min_bound <= m:
                undec[m] += 1
            else:
                hits[m] += 1
    return [DensityEstimate(m, samples, hits[m], undec[m], seed, level)
            for m in ms]
