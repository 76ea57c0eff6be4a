"""Finite-precision arithmetic in totally ramified extensions of Q_p.

The field is K = Q_p(pi) with pi**e = p, p an odd prime.  Every scalar is
known modulo pi**N for a fixed absolute precision N (in pi-adic digits)
and is stored in a normalized form: its pi-adic valuation plus the unit
part written as a polynomial u_0 + u_1*pi + ... + u_{e-1}*pi^(e-1) whose
integer coefficients are canonically reduced.  Exact zero is a distinct
state from "zero at working precision".

All values are immutable after construction and safe to share between
tasks; there is no global state.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, PrecisionError, PrecisionExhaustedError

INF = math.inf


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def int_val(n: int, p: int) -> int | float:
    """p-adic valuation of an integer; INF for 0."""
    if n == 0:
        return INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class FieldSpec:
    """Working field Q_p(pi), pi**e = p, with absolute precision ``prec``.

    ``prec`` counts pi-adic digits; results are carried modulo pi**prec.
    """

    p: int
    e: int = 1
    prec: int = 20

    def __post_init__(self):
        if self.p == 2:
            raise ConfigError("p = 2 is rejected; an odd prime is required")
        if not _is_prime(self.p) or self.p < 3:
            raise ConfigError(f"p must be an odd prime, got {self.p}")
        if self.e < 1:
            raise ConfigError(f"ramification index must be >= 1, got {self.e}")
        if self.prec < 4 * self.e:
            raise ConfigError(
                f"precision {self.prec} below minimum 4*e = {4 * self.e}"
            )

    # -- constructors -------------------------------------------------

    def zero(self) -> PadicScalar:
        return PadicScalar(self, None, (0,) * self.e, self.prec)

    def one(self) -> PadicScalar:
        return self.from_int(1)

    def from_int(self, n: int, prec: int | None = None) -> PadicScalar:
        return self.from_fraction(Fraction(n), prec)

    def from_fraction(self, q: Fraction, prec: int | None = None) -> PadicScalar:
        """Embed an exact rational, known modulo pi**prec."""
        prec = self.prec if prec is None else prec
        if q == 0:
            return self.zero()
        num, den = q.numerator, q.denominator
        vn, vd = int_val(num, self.p), int_val(den, self.p)
        vpi = (vn - vd) * self.e
        un = num // self.p**vn
        ud = den // self.p**vd
        rel = prec - vpi
        if rel <= 0:
            return PadicScalar(self, prec, (0,) * self.e, prec)
        m = self.p ** _digits(rel, 0, self.e)
        u0 = un * pow(ud, -1, m) % m
        unit = (u0,) + (0,) * (self.e - 1)
        return PadicScalar(self, vpi, _reduce_unit(unit, rel, self), prec)

    def pi_power(self, k: int, prec: int | None = None) -> PadicScalar:
        """pi**k as a scalar (k may be negative)."""
        prec = self.prec if prec is None else prec
        unit = (1,) + (0,) * (self.e - 1)
        return PadicScalar(self, k, unit, prec)


def _digits(rel: int, j: int, e: int) -> int:
    """Number of p-adic digits carried by unit coefficient j at relative
    precision rel."""
    if rel <= j:
        return 0
    return -((rel - j) // -e)


def _reduce_unit(unit, rel: int, field: FieldSpec):
    p, e = field.p, field.e
    return tuple(unit[j] % (p ** _digits(rel, j, e)) if _digits(rel, j, e) else 0
                 for j in range(e))


def _poly_mul(a, b, p: int, e: int):
    """Multiply two pi-polynomials modulo pi**e - p."""
    if e == 1:
        return (a[0] * b[0],)
    conv = [0] * (2 * e - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    conv[i + j] += ai * bj
    out = conv[:e]
    for t in range(e, 2 * e - 1):
        out[t - e] += conv[t] * p
    return tuple(out)


def _poly_shift_up(c, k: int, p: int, e: int):
    """Coefficients of pi**k * (sum c_j pi^j), k >= 0."""
    if k == 0:
        return tuple(c)
    out = [0] * e
    for j, cj in enumerate(c):
        if cj:
            q, r = divmod(j + k, e)
            out[r] += cj * p**q
    return tuple(out)


def _poly_shift_down(c, k: int, p: int, e: int):
    """Coefficients of pi**(-k) * (sum c_j pi^j); requires valuation >= k."""
    if k == 0:
        return tuple(c)
    out = [0] * e
    for j, cj in enumerate(c):
        if cj:
            q, r = divmod(j - k, e)
            if q >= 0:
                out[r] += cj * p**q
            else:
                d = p**-q
                if cj % d:
                    raise PrecisionError("shift below valuation")
                out[r] += cj // d
    return tuple(out)


def _poly_val(c, rel: int, p: int, e: int) -> int | float:
    """pi-adic valuation of an integral pi-polynomial, at least rel if all
    coefficients vanish modulo their moduli."""
    v = INF
    for j, cj in enumerate(c):
        d = _digits(rel, j, e)
        if d == 0:
            continue
        cj %= p**d
        if cj:
            v = min(v, e * int_val(cj, p) + j)
    return v


def _poly_inv(u, rel: int, field: FieldSpec):
    """Inverse of a unit pi-polynomial modulo pi**rel (Newton iteration)."""
    p, e = field.p, field.e
    m = p ** _digits(rel, 0, e)
    w = (pow(u[0] % p, -1, p),) + (0,) * (e - 1)
    bits = max(1, rel).bit_length() + 1
    two = (2 % m,) + (0,) * (e - 1)
    for _ in range(bits):
        uw = _poly_mul(u, w, p, e)
        corr = tuple((two[j] - uw[j]) for j in range(e))
        w = _reduce_unit(_poly_mul(w, corr, p, e), rel, field)
    return w


class PadicScalar:
    """An element of K known modulo pi**prec.

    States: exact zero (``vpi`` is None); zero at precision (``vpi == prec``
    with zero unit part); or normal, with ``vpi < prec`` and a unit part
    whose constant coefficient is prime to p.
    """

    __slots__ = ("field", "vpi", "unit", "prec")

    def __init__(self, field: FieldSpec, vpi, unit, prec: int):
        self.field = field
        self.vpi = vpi
        self.unit = unit
        self.prec = prec

    # -- state predicates ---------------------------------------------

    @property
    def is_exact_zero(self) -> bool:
        return self.vpi is None

    @property
    def is_zero_to_prec(self) -> bool:
        """Zero at working precision (includes exact zero)."""
        return self.vpi is None or self.vpi >= self.prec

    @property
    def is_unit(self) -> bool:
        return self.vpi == 0

    @property
    def is_integral(self) -> bool:
        return self.vpi is None or self.vpi >= 0

    # -- valuation ----------------------------------------------------

    @property
    def vmin_pi(self) -> int | float:
        """pi-adic valuation: exact for normal scalars, INF for exact zero,
        and a lower bound (= prec) for zero-at-precision."""
        return INF if self.vpi is None else self.vpi

    @property
    def val_is_exact(self) -> bool:
        return self.vpi is None or self.vpi < self.prec

    def valuation(self) -> Fraction | float:
        """Valuation normalized so v(p) = 1."""
        v = self.vmin_pi
        return v if v is INF else Fraction(v, self.field.e)

    def residue(self) -> int:
        """Image in the residue field F_p; requires an integral value."""
        if not self.is_integral:
            raise PrecisionError("residue of a non-integral scalar")
        if self.is_zero_to_prec or self.vpi > 0:
            return 0
        return self.unit[0] % self.field.p

    # -- arithmetic ----------------------------------------------------

    def _check(self, other: PadicScalar):
        if self.field != other.field:
            raise ConfigError("scalars from different fields")

    def __add__(self, other: PadicScalar) -> PadicScalar:
        self._check(other)
        f = self.field
        if self.is_exact_zero:
            return other
        if other.is_exact_zero:
            return self
        prec = min(self.prec, other.prec)
        s = min(self.vpi, other.vpi)
        a = _poly_shift_up(self.unit, self.vpi - s, f.p, f.e)
        b = _poly_shift_up(other.unit, other.vpi - s, f.p, f.e)
        tot = tuple(a[j] + b[j] for j in range(f.e))
        return _normalize(f, s, tot, prec)

    def __neg__(self) -> PadicScalar:
        if self.is_exact_zero:
            return self
        f = self.field
        rel = self.prec - self.vpi
        unit = _reduce_unit(tuple(-c for c in self.unit), rel, f)
        return PadicScalar(f, self.vpi, unit, self.prec)

    def __sub__(self, other: PadicScalar) -> PadicScalar:
        return self + (-other)

    def __mul__(self, other: PadicScalar) -> PadicScalar:
        self._check(other)
        f = self.field
        if self.is_exact_zero or other.is_exact_zero:
            return f.zero()
        rel = min(self.prec - self.vpi, other.prec - other.vpi)
        vpi = self.vpi + other.vpi
        prec = min(vpi + rel, f.prec)
        if prec <= 0:
            raise PrecisionExhaustedError("product precision exhausted")
        if vpi >= prec:
            return PadicScalar(f, prec, (0,) * f.e, prec)
        u = _poly_mul(self.unit, other.unit, f.p, f.e)
        return PadicScalar(f, vpi, _reduce_unit(u, prec - vpi, f), prec)

    def inverse(self) -> PadicScalar:
        f = self.field
        if self.is_exact_zero:
            raise ZeroDivisionError("division by exact zero")
        if self.is_zero_to_prec:
            raise PrecisionError("divisor indistinguishable from zero")
        rel = self.prec - self.vpi
        vpi = -self.vpi
        prec = min(vpi + rel, f.prec)
        if prec <= 0:
            raise PrecisionExhaustedError("inverse precision exhausted")
        w = _poly_inv(self.unit, min(rel, prec - vpi), f)
        return PadicScalar(f, vpi, _reduce_unit(w, prec - vpi, f), prec)

    def __truediv__(self, other: PadicScalar) -> PadicScalar:
        self._check(other)
        f = self.field
        if other.is_exact_zero:
            raise ZeroDivisionError("division by exact zero")
        if other.is_zero_to_prec:
            raise PrecisionError("divisor indistinguishable from zero")
        if self.is_exact_zero:
            return f.zero()
        # quotient directly: avoids the intermediate 1/other, whose own
        # absolute precision can die even when the quotient is fine
        rel = min(self.prec - self.vpi, other.prec - other.vpi)
        vpi = self.vpi - other.vpi
        prec = min(vpi + rel, f.prec)
        if prec <= 0:
            raise PrecisionExhaustedError("quotient precision exhausted")
        if vpi >= prec:
            return PadicScalar(f, prec, (0,) * f.e, prec)
        w = _poly_inv(other.unit, prec - vpi, f)
        u = _poly_mul(self.unit, w, f.p, f.e)
        return PadicScalar(f, vpi, _reduce_unit(u, prec - vpi, f), prec)

    def __pow__(self, k: int) -> PadicScalar:
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    # -- structure ------------------------------------------------------

    def reduce(self, prec: int) -> PadicScalar:
        """Truncate to a lower absolute precision."""
        if prec > self.prec:
            raise PrecisionError("cannot gain precision")
        if prec <= 0:
            raise PrecisionExhaustedError("reduced precision exhausted")
        if self.is_exact_zero:
            return self
        return _normalize(self.field, self.vpi,
                          _poly_shift_up(self.unit, 0, self.field.p, self.field.e),
                          prec)

    def digits(self) -> tuple[int, ...]:
        """Canonical pi-adic digits from position vpi up to prec."""
        if self.is_zero_to_prec:
            return ()
        p, e = self.field.p, self.field.e
        out = []
        for i in range(self.prec - self.vpi):
            q, r = divmod(i, e)
            out.append((self.unit[r] // p**q) % p)
        return tuple(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return (self.field == other.field and self.vpi == other.vpi
                and self.unit == other.unit and self.prec == other.prec)

    def __hash__(self):
        return hash((self.field, self.vpi, self.unit, self.prec))

    def __repr__(self):
        return f"PadicScalar({format_scalar(self)!r})"


def _normalize(field: FieldSpec, shift: int, poly, prec: int) -> PadicScalar:
    """Canonical scalar for pi**shift * poly(pi), known modulo pi**prec."""
    if prec <= 0:
        raise PrecisionExhaustedError("absolute precision exhausted")
    prec = min(prec, field.prec)
    if shift >= prec:
        return PadicScalar(field, prec, (0,) * field.e, prec)
    rel = prec - shift
    poly = _reduce_unit(poly, rel, field)
    v = _poly_val(poly, rel, field.p, field.e)
    if v is INF or shift + v >= prec:
        return PadicScalar(field, prec, (0,) * field.e, prec)
    unit = _poly_shift_down(poly, v, field.p, field.e)
    vpi = shift + v
    return PadicScalar(field, vpi, _reduce_unit(unit, prec - vpi, field), prec)


def congruent(a: PadicScalar, b: PadicScalar, k_pi: int) -> bool:
    """True when v_pi(a - b) >= k_pi at the available precision."""
    d = a - b
    return d.vmin_pi >= k_pi


def delta_vpi(a: PadicScalar, b: PadicScalar) -> tuple[int | float, bool]:
    """(pi-valuation of a - b, saturated?).

    INF when the operands coincide as stored values or the difference is
    exactly zero; otherwise the exact valuation, or the precision bound
    with ``saturated = True`` when the difference vanishes at working
    precision.
    """
    if a == b:
        return INF, False
    d = a - b
    if d.is_exact_zero:
        return INF, False
    if d.is_zero_to_prec:
        return d.vpi, True
    return d.vpi, False


# -- p-adic exponential ----------------------------------------------------


def padic_exp(x: PadicScalar) -> PadicScalar:
    """exp(x) for v(x) > 1/(p-1), truncated so the series tail has
    valuation at least the working precision."""
    f = x.field
    p, e = f.p, f.e
    if x.is_exact_zero:
        return f.one()
    if x.vmin_pi * (p - 1) <= e:
        raise PrecisionError(
            f"exp requires v(x) > 1/(p-1); got v = {x.valuation()}")
    prec = min(x.prec, f.prec)
    if e == 1 and x.vpi is not None:
        return _exp_int(x, prec)
    return _exp_poly(x, prec)


_EXP_TERM_CACHE: dict = {}


def _exp_terms_needed(vpi: int, prec: int, p: int, e: int) -> int:
    i = 1
    while True:
        # v_p(i!) <= (i-1)/(p-1), so the tail from i on is below precision
        if i * vpi - e * Fraction(i - 1, p - 1) >= prec:
            return i
        i += 1


def _exp_int_tables(p: int, vpi: int, prec: int):
    """(modulus, p**prec, [(p**s_i, invfact_i)]) for the e = 1 series."""
    key = (p, vpi, prec)
    hit = _EXP_TERM_CACHE.get(key)
    if hit is not None:
        return hit
    imax = _exp_terms_needed(vpi, prec, p, 1)
    guard = int(int_val(math.factorial(imax), p)) + 1
    m = p ** (prec + guard)
    rows = []
    fact_unit_inv = 1
    s = 0
    for i in range(1, imax + 1):
        vi = int(int_val(i, p))
        s += vi
        fact_unit_inv = fact_unit_inv * pow(i // p**vi, -1, m) % m
        rows.append((p**s, fact_unit_inv))
    out = (m, p**prec, rows)
    _EXP_TERM_CACHE[key] = out
    return out


def _exp_int(x: PadicScalar, prec: int) -> PadicScalar:
    """Integer fast path for e = 1: series summed modulo p**(prec + guard)."""
    f = x.field
    p = f.p
    m, pprec, rows = _exp_int_tables(p, x.vpi, prec)
    rep = (x.unit[0] * p**x.vpi) % m
    acc = 1
    cur = 1
    for ps, inv in rows:
        cur = cur * rep % m
        # ps divides cur: v_p(rep**i) >= i while v_p(i!) < i
        acc = (acc + (cur // ps) * inv) % m
    return _normalize(f, 0, (acc % pprec,), prec)


def _exp_poly(x: PadicScalar, prec: int) -> PadicScalar:
    """Exact rational-coefficient series for ramified fields."""
    f = x.field
    p, e = f.p, f.e
    # Exact representative of x as a pi-polynomial with Fraction
    # coefficients: unit * pi**vpi.
    q, r = divmod(x.vpi, e)
    rep = [Fraction(0)] * e
    for j, cj in enumerate(x.unit):
        if cj:
            qq, rr = divmod(j + r, e)
            rep[rr] += Fraction(cj) * Fraction(p) ** (q + qq)
    imax = _exp_terms_needed(x.vpi, prec, p, e)
    term = [Fraction(1)] + [Fraction(0)] * (e - 1)
    acc = term[:]
    for i in range(1, imax + 1):
        term = list(_frac_poly_mul(term, rep, p, e))
        term = [c / i for c in term]
        if _frac_poly_val(term, p, e) >= prec:
            continue
        acc = [a + t for a, t in zip(acc, term)]
    # Reduce the exact rational sum modulo pi**prec.
    ints = []
    for j, c in enumerate(acc):
        d = _digits(prec, j, e)
        if d == 0:
            ints.append(0)
            continue
        m = p**d
        den = c.denominator
        vd = int(int_val(den, p))
        if vd:
            raise PrecisionError("non-integral exp coefficient")
        ints.append(c.numerator * pow(den, -1, m) % m)
    return _normalize(f, 0, tuple(ints), prec)


def _frac_poly_mul(a, b, p: int, e: int):
    conv = [Fraction(0)] * (2 * e - 1) if e > 1 else [a[0] * b[0]]
    if e > 1:
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        conv[i + j] += ai * bj
        out = conv[:e]
        for t in range(e, 2 * e - 1):
            out[t - e] += conv[t] * p
        return tuple(out)
    return tuple(conv)


def _frac_poly_val(c, p: int, e: int):
    v = INF
    for j, cj in enumerate(c):
        if cj:
            vj = int_val(cj.numerator, p) - int_val(cj.denominator, p)
            v = min(v, e * vj + j)
    return v


# -- literal syntax ---------------------------------------------------------

_TERM_RE = re.compile(r"^(-?\d+)\*(\d+)\^\(?(-?\d+(?:/\d+)?)\)?$")
_BIGO_RE = re.compile(r"^O\((\d+)\^\(?(-?\d+(?:/\d+)?)\)?\)$")


def format_scalar(x: PadicScalar) -> str:
    """Literal form ``u*p^k + ... + O(p^k)`` with k rational over e."""
    f = x.field
    if x.is_exact_zero:
        return "0"
    cap = f"O({f.p}^{_fmt_exp(Fraction(x.prec, f.e))})"
    if x.is_zero_to_prec:
        return cap
    terms = []
    for j, cj in enumerate(x.unit):
        if cj:
            k = Fraction(x.vpi + j, f.e)
            terms.append(f"{cj}*{f.p}^{_fmt_exp(k)}")
    return "+".join(terms + [cap])


def _fmt_exp(k: Fraction) -> str:
    if k.denominator == 1 and k >= 0:
        return str(k)
    return f"({k})"


def parse_scalar(text: str, field: FieldSpec) -> PadicScalar:
    """Parse the literal syntax produced by :func:`format_scalar`.

    Terms are assembled digit-exactly (no arithmetic round trips), so
    parsing a formatted scalar reproduces it bitwise.
    """
    s = text.replace(" ", "")
    if s == "0":
        return field.zero()
    prec = field.prec
    terms: list[tuple[int, int]] = []  # (pi exponent, integer unit)
    for part in re.split(r"\+(?=[-\dO])", s):
        mo = _BIGO_RE.match(part)
        if mo:
            p_lit, k = mo.groups()
            if int(p_lit) != field.p:
                raise ConfigError(f"literal prime {p_lit} != field prime {field.p}")
            kpi = Fraction(k) * field.e
            if kpi.denominator != 1:
                raise ConfigError(f"exponent {k} not in (1/e)Z")
            prec = int(kpi)
            continue
        mo = _TERM_RE.match(part)
        if not mo:
            raise ConfigError(f"bad scalar literal term: {part!r}")
        u, p_lit, k = mo.groups()
        if int(p_lit) != field.p:
            raise ConfigError(f"literal prime {p_lit} != field prime {field.p}")
        kpi = Fraction(k) * field.e
        if kpi.denominator != 1:
            raise ConfigError(f"exponent {k} denominator does not divide e")
        terms.append((int(kpi), int(u)))
    if not terms:
        prec = min(prec, field.prec)
        return PadicScalar(field, prec, (0,) * field.e, prec)
    shift = min(k for k, _ in terms)
    poly = [0] * field.e
    for k, u in terms:
        q, r = divmod(k - shift, field.e)
        poly[r] += u * field.p**q
    return _normalize(field, shift, tuple(poly), min(prec, field.prec))
