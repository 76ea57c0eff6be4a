"""Polynomials over the working field: Hensel root lifting and splitting.

Root extraction stays inside the fixed field tower: simple residue roots
are lifted by Newton iteration; clustered residue roots are handled by
translate-and-rescale along integral Newton-polygon slopes.  Polynomials
that do not split this way report no roots rather than extending the
field.
"""

from __future__ import annotations

from .errors import PrecisionError
from .field import INF, FieldSpec, PadicScalar


class Poly:
    """Dense polynomial with scalar coefficients, ascending order."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: FieldSpec, coeffs):
        cs = list(coeffs)
        while len(cs) > 1 and cs[-1].is_exact_zero:
            cs.pop()
        self.field = field
        self.coeffs = tuple(cs)

    @classmethod
    def from_ints(cls, field: FieldSpec, ints) -> Poly:
        return cls(field, [field.from_int(c) for c in ints])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_monic(self) -> bool:
        lead = self.coeffs[-1]
        return (lead - self.field.one()).is_zero_to_prec

    def is_integral(self) -> bool:
        return all(c.is_integral for c in self.coeffs)

    def __call__(self, x: PadicScalar) -> PadicScalar:
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> Poly:
        f = self.field
        if self.degree == 0:
            return Poly(f, [f.zero()])
        return Poly(f, [self.coeffs[i] * f.from_int(i)
                        for i in range(1, len(self.coeffs))])

    def deflate(self, root: PadicScalar) -> Poly:
        """Synthetic division by (x - root); the remainder is discarded."""
        out = []
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * root + c
            out.append(acc)
        out.pop()  # remainder
        return Poly(self.field, list(reversed(out)))

    def taylor_shift(self, c: PadicScalar) -> Poly:
        """Coefficients of P(c + y) via repeated synthetic division."""
        f = self.field
        work = list(self.coeffs)
        out = []
        while work:
            acc = f.zero()
            for i in range(len(work) - 1, -1, -1):
                acc = acc * c + work[i]
                work[i] = acc
            out.append(work[0])
            work = work[1:]
        return Poly(f, out)

    def residue(self) -> list[int] | None:
        """Coefficients modulo pi, or None if some coefficient is not
        integral."""
        if not self.is_integral():
            return None
        return [c.residue() for c in self.coeffs]

    def __repr__(self):
        return f"Poly(deg={self.degree})"


def hensel_lift_root(P: Poly, x0: PadicScalar, max_iter: int = 64) -> PadicScalar:
    """Newton-lift an approximate root with v(P(x0)) > 2 v(P'(x0)).

    The defect valuation at least doubles (minus the fixed derivative
    loss) each step; returns x with P(x) vanishing at working precision.
    """
    f0 = P(x0)
    if f0.is_exact_zero:
        return x0
    d0 = P.derivative()(x0)
    if d0.is_zero_to_prec:
        raise PrecisionError("derivative vanishes at working precision")
    if f0.vmin_pi <= 2 * d0.vmin_pi:
        raise PrecisionError(
            f"Hensel precondition v(P(x0)) > 2 v(P'(x0)) fails: "
            f"{f0.vmin_pi} <= 2*{d0.vmin_pi}")
    D = P.derivative()
    x = x0
    defect = f0.vmin_pi
    fx = f0
    for _ in range(max_iter):
        x = x - fx / D(x)
        fx = P(x)
        if fx.is_zero_to_prec:
            return x
        if fx.vmin_pi <= defect:
            raise PrecisionError("Hensel defect is not decreasing")
        defect = fx.vmin_pi
    raise PrecisionError("Hensel iteration failed to converge")


def roots_monic(P: Poly, max_depth: int = 8) -> list[PadicScalar] | None:
    """All roots (with multiplicity) of a monic integral polynomial that
    splits over the working field; None when splitting fails here."""
    if not P.is_monic() or not P.is_integral():
        return None
    roots: list[PadicScalar] = []
    cur = P
    while cur.degree > 0:
        r = _find_one_root(cur, max_depth)
        if r is None:
            return None
        if not P(r).is_zero_to_prec:
            return None
        roots.append(r)
        cur = cur.deflate(r)
    return roots


def _residue_roots(res: list[int], p: int) -> list[tuple[int, bool]]:
    """(root, is_simple) pairs of a nonzero F_p polynomial."""
    der = [(i * c) % p for i, c in enumerate(res)][1:]
    out = []
    for c in range(p):
        val = _eval_mod(res, c, p)
        if val == 0:
            out.append((c, _eval_mod(der, c, p) != 0))
    return out


def _eval_mod(coeffs: list[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def _find_one_root(P: Poly, depth: int) -> PadicScalar | None:
    f = P.field
    if P.degree == 1:
        return (-P.coeffs[0]) / P.coeffs[1]
    res = P.residue()
    if res is None or depth <= 0:
        return None
    rr = _residue_roots(res, f.p)
    for c, simple in rr:
        if simple:
            return hensel_lift_root(P, f.from_int(c))
    for c, _ in rr:
        r = _cluster_root(P, f.from_int(c), depth)
        if r is not None:
            return r
    return None


def _cluster_root(P: Poly, c: PadicScalar, depth: int) -> PadicScalar | None:
    """Root near c when the residue root c is repeated: shift to c, pick an
    integral Newton-polygon slope, rescale, and retry."""
    f = P.field
    T = P.taylor_shift(c)
    if T.coeffs[0].is_exact_zero:
        return c
    pts = [(i, T.coeffs[i].vmin_pi) for i in range(len(T.coeffs))
           if not T.coeffs[i].is_exact_zero]
    slopes = _polygon_slopes(pts)
    for h in slopes:
        if h <= 0 or h.denominator != 1:
            continue
        h = int(h)
        try:
            scaled = [T.coeffs[i] * f.pi_power(i * h)
                      for i in range(len(T.coeffs))]
            shift = min(s.vmin_pi for s in scaled)
            if shift is INF or shift >= f.prec:
                continue
            R = Poly(f, [s * f.pi_power(-int(shift)) for s in scaled])
        except PrecisionError:
            continue
        rres = R.residue()
        if rres is None:
            continue
        for z0, simple in _residue_roots(rres, f.p):
            if z0 == 0 or not simple:
                continue
            try:
                z = hensel_lift_root(R, f.from_int(z0))
            except PrecisionError:
                continue
            return c + z * f.pi_power(h)
        # repeated nonzero residue roots: recurse one level down
        for z0, simple in _residue_roots(rres, f.p):
            if z0 == 0 or simple:
                continue
            sub = _cluster_root(R, f.from_int(z0), depth - 1)
            if sub is not None:
                return c + sub * f.pi_power(h)
    if T.coeffs[0].is_zero_to_prec and slopes:
        # not separable at working precision: every cluster root agrees
        # with c up to the smallest polygon slope
        s = int(min(slopes))
        return c.reduce(min(c.prec, max(s, 1)))
    return None


def _polygon_slopes(pts):
    """Positive root valuations from the lower Newton polygon, largest
    first, as Fractions in pi-digit units."""
    from fractions import Fraction

    hull = []
    for i, v in pts:
        if v is INF:
            continue
        while len(hull) >= 2:
            (i1, v1), (i2, v2) = hull[-2], hull[-1]
            if (v2 - v1) * (i - i1) >= (v - v1) * (i2 - i1):
                hull.pop()
            else:
                break
        hull.append((i, v))
    slopes = []
    for (i1, v1), (i2, v2) in zip(hull, hull[1:]):
        s = Fraction(v1 - v2, i2 - i1)
        if s > 0:
            slopes.append(s)
    return sorted(set(slopes), reverse=True)
