"""Dense matrix algebra over the working field.

Covers traces, characteristic polynomials (division-free Berkowitz),
discriminants, Smith normal form over the valuation ring, trace-pairing
Gram matrices, Newton idempotent lifting, and elimination-based solving
with minimal-valuation pivoting.  All matrices are immutable; operations
are pure.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ConfigError, PrecisionError, RankDeficiencyError
from .field import INF, FieldSpec, PadicScalar
from .polys import Poly, roots_monic


class PadicMatrix:
    """Square matrix of scalars over one :class:`FieldSpec`."""

    __slots__ = ("field", "d", "rows")

    def __init__(self, field: FieldSpec, rows):
        rows = tuple(tuple(r) for r in rows)
        d = len(rows)
        if d < 1 or any(len(r) != d for r in rows):
            raise ConfigError("matrix must be square with d >= 1")
        self.field = field
        self.d = d
        self.rows = rows

    @classmethod
    def from_rows(cls, field: FieldSpec, rows) -> PadicMatrix:
        """Build from ints, Fractions, or scalars."""
        conv = []
        for r in rows:
            conv.append([x if isinstance(x, PadicScalar)
                         else field.from_fraction(Fraction(x)) for x in r])
        return cls(field, conv)

    @classmethod
    def identity(cls, field: FieldSpec, d: int) -> PadicMatrix:
        one, zero = field.one(), field.zero()
        return cls(field, [[one if i == j else zero for j in range(d)]
                           for i in range(d)])

    @classmethod
    def zero(cls, field: FieldSpec, d: int) -> PadicMatrix:
        z = field.zero()
        return cls(field, [[z] * d for _ in range(d)])

    # -- basic structure -------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @property
    def min_prec(self) -> int:
        return min(x.prec for r in self.rows for x in r)

    def min_valuation(self) -> int | float:
        """Smallest entry pi-valuation (lower bounds included)."""
        return min((x.vmin_pi for r in self.rows for x in r), default=INF)

    def trace(self) -> PadicScalar:
        t = self.field.zero()
        for i in range(self.d):
            t = t + self.rows[i][i]
        return t

    def transpose(self) -> PadicMatrix:
        return PadicMatrix(self.field, zip(*self.rows))

    def column(self, j: int):
        return [self.rows[i][j] for i in range(self.d)]

    def __add__(self, other: PadicMatrix) -> PadicMatrix:
        return PadicMatrix(self.field,
                           [[a + b for a, b in zip(ra, rb)]
                            for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other: PadicMatrix) -> PadicMatrix:
        return PadicMatrix(self.field,
                           [[a - b for a, b in zip(ra, rb)]
                            for ra, rb in zip(self.rows, other.rows)])

    def __neg__(self) -> PadicMatrix:
        return PadicMatrix(self.field, [[-a for a in r] for r in self.rows])

    def scale(self, c: PadicScalar) -> PadicMatrix:
        return PadicMatrix(self.field, [[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: PadicMatrix) -> PadicMatrix:
        if self.d != other.d:
            raise ConfigError("dimension mismatch")
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            out.append([_dot(r, c) for c in cols])
        return PadicMatrix(self.field, out)

    def __pow__(self, k: int) -> PadicMatrix:
        if k < 0:
            return self.inverse() ** (-k)
        out = PadicMatrix.identity(self.field, self.d)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base if k > 1 else base
            k >>= 1
        return out

    def mul_vector(self, v):
        return [_dot(r, v) for r in self.rows]

    def __eq__(self, other):
        if not isinstance(other, PadicMatrix):
            return NotImplemented
        return self.field == other.field and self.rows == other.rows

    def __hash__(self):
        return hash((self.field, self.rows))

    def __repr__(self):
        return f"PadicMatrix(d={self.d})"

    # -- solving ----------------------------------------------------------

    def inverse(self) -> PadicMatrix:
        return solve(self, PadicMatrix.identity(self.field, self.d))

    def conjugated_by(self, C: PadicMatrix) -> PadicMatrix:
        """C^(-1) @ self @ C."""
        return C.inverse() @ self @ C

    def det(self) -> PadicScalar:
        """Determinant, division-free (constant charpoly coefficient)."""
        c0 = _berkowitz(self)[0]
        return c0 if self.d % 2 == 0 else -c0

    def residue_rows(self) -> list[list[int]]:
        """Entrywise reduction to F_p; requires integral entries."""
        return [[x.residue() for x in r] for r in self.rows]


def _dot(r, c) -> PadicScalar:
    acc = None
    for a, b in zip(r, c):
        t = a * b
        acc = t if acc is None else acc + t
    return acc


def solve(A: PadicMatrix, B: PadicMatrix) -> PadicMatrix:
    """X with A @ X = B, by elimination with minimal-valuation pivoting
    (ties: lowest row, then column)."""
    d = A.d
    a = [list(r) for r in A.rows]
    b = [list(r) for r in B.rows]
    colperm = list(range(d))
    for k in range(d):
        pi, pj = _pivot(a, k, d)
        if pi is None:
            raise RankDeficiencyError("pivot indistinguishable from zero")
        if pi != k:
            a[k], a[pi] = a[pi], a[k]
            b[k], b[pi] = b[pi], b[k]
        if pj != k:
            for r in a:
                r[k], r[pj] = r[pj], r[k]
            colperm[k], colperm[pj] = colperm[pj], colperm[k]
        inv = a[k][k].inverse()
        a[k] = [inv * x for x in a[k]]
        b[k] = [inv * x for x in b[k]]
        for i in range(d):
            if i == k:
                continue
            f = a[i][k]
            if f.is_zero_to_prec:
                continue
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
            b[i] = [x - f * y for x, y in zip(b[i], b[k])]
    out = [None] * d
    for k in range(d):
        out[colperm[k]] = b[k]
    return PadicMatrix(A.field, out)


def _pivot(a, k: int, d: int):
    best = None
    best_v = INF
    for i in range(k, d):
        for j in range(k, d):
            x = a[i][j]
            if x.is_zero_to_prec:
                continue
            if x.vmin_pi < best_v:
                best_v = x.vmin_pi
                best = (i, j)
    return best if best else (None, None)


def rank_to_precision(A: PadicMatrix) -> int:
    """Number of elimination pivots distinguishable from zero."""
    d = A.d
    a = [list(r) for r in A.rows]
    rank = 0
    for k in range(d):
        pi, pj = _pivot(a, k, d)
        if pi is None:
            break
        if pi != k:
            a[k], a[pi] = a[pi], a[k]
        if pj != k:
            for r in a:
                r[k], r[pj] = r[pj], r[k]
        rank += 1
        piv = a[k][k]
        for i in range(k + 1, d):
            if not a[i][k].is_zero_to_prec:
                # full pivoting keeps the multiplier integral
                f = a[i][k] / piv
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return rank


# -- characteristic polynomial ----------------------------------------------


def _berkowitz(M: PadicMatrix):
    """Ascending coefficients of det(xI - M), division-free."""
    f = M.field
    one = f.one()
    p = [one, -M.rows[0][0]]  # leading-first for the 1x1 block
    for m in range(2, M.d + 1):
        a_mm = M.rows[m - 1][m - 1]
        R = M.rows[m - 1][:m - 1]
        S = [M.rows[i][m - 1] for i in range(m - 1)]
        sub = [M.rows[i][:m - 1] for i in range(m - 1)]
        t = [one, -a_mm]
        vec = S
        for _ in range(m - 1):
            t.append(-_dot(R, vec))
            if len(t) < m + 1:
                vec = [_dot(row, vec) for row in sub]
        t = t[:m + 1]
        q = [f.zero()] * (m + 1)
        for i in range(m + 1):
            for j in range(min(i + 1, m)):
                q[i] = q[i] + t[i - j] * p[j]
        p = q
    return tuple(reversed(p))


class CharPolyData:
    """Characteristic polynomial of a matrix: coefficients (ascending,
    monic), discriminant, and eigenvalues when the polynomial splits over
    the working field; the last two are computed on demand."""

    __slots__ = ("field", "d", "coeffs", "_disc", "_eigen", "_eigen_done")

    def __init__(self, field: FieldSpec, d: int, coeffs):
        self.field = field
        self.d = d
        self.coeffs = tuple(coeffs)
        self._disc = None
        self._eigen = None
        self._eigen_done = False

    def trace(self) -> PadicScalar:
        return -self.coeffs[self.d - 1]

    def det(self) -> PadicScalar:
        c0 = self.coeffs[0]
        return c0 if self.d % 2 == 0 else -c0

    def poly(self) -> Poly:
        return Poly(self.field, self.coeffs)

    @property
    def disc(self) -> PadicScalar:
        if self._disc is None:
            self._disc = _discriminant(self.field, self.coeffs)
        return self._disc

    @property
    def eigen_data(self):
        """List of (eigenvalue, multiplicity) or None; deterministic order
        by valuation then canonical digits."""
        if not self._eigen_done:
            self._eigen_done = True
            roots = roots_monic(self.poly())
            if roots is not None:
                self._eigen = _group_eigen(roots)
        return self._eigen


def _group_eigen(roots):
    tagged = sorted(roots, key=_scalar_sort_key)
    out = []
    for r in tagged:
        if out and (out[-1][0] - r).is_zero_to_prec:
            out[-1] = (out[-1][0], out[-1][1] + 1)
        else:
            out.append((r, 1))
    return out


def _scalar_sort_key(x: PadicScalar):
    v = x.vmin_pi
    return (0 if v is not INF else 1, v if v is not INF else 0, x.digits())


def charpoly(M: PadicMatrix) -> CharPolyData:
    """Characteristic polynomial data of M (conjugation-invariant)."""
    return CharPolyData(M.field, M.d, _berkowitz(M))


def _discriminant(field: FieldSpec, coeffs) -> PadicScalar:
    """Discriminant of a monic polynomial via the Sylvester resultant."""
    d = len(coeffs) - 1
    if d == 1:
        return field.one()
    P = list(coeffs)
    dP = [P[i] * field.from_int(i) for i in range(1, d + 1)]
    n = 2 * d - 1
    zero = field.zero()
    rows = []
    for i in range(d - 1):  # rows of P, descending coefficients
        row = [zero] * n
        for j in range(d + 1):
            row[i + j] = P[d - j]
        rows.append(row)
    for i in range(d):  # rows of P'
        row = [zero] * n
        for j in range(d):
            row[i + j] = dP[d - 1 - j]
        rows.append(row)
    res = PadicMatrix(field, rows).det()
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    return res if sign == 1 else -res


# -- Smith normal form -------------------------------------------------------


def smith_form(M: PadicMatrix):
    """(invariant valuations k_1 <= ... <= k_d, U, V) with
    U @ M @ V = diag(pi**k_i) and U, V unimodular over the valuation ring.

    Raises RankDeficiencyError when a pivot is indistinguishable from
    zero (including exact rank deficiency).
    """
    f = M.field
    d = M.d
    a = [list(r) for r in M.rows]
    U = [list(r) for r in PadicMatrix.identity(f, d).rows]
    V = [list(r) for r in PadicMatrix.identity(f, d).rows]
    ks = []
    for k in range(d):
        pi_, pj = _pivot(a, k, d)
        if pi_ is None:
            raise RankDeficiencyError(
                f"rank deficient at step {k}: no usable pivot")
        if pi_ != k:
            a[k], a[pi_] = a[pi_], a[k]
            U[k], U[pi_] = U[pi_], U[k]
        if pj != k:
            for r in a:
                r[k], r[pj] = r[pj], r[k]
            for r in V:
                r[k], r[pj] = r[pj], r[k]
        piv = a[k][k]
        kv = piv.vmin_pi
        ks.append(int(kv))
        # normalize the pivot row so the diagonal entry is exactly pi**k
        u_inv = (piv * f.pi_power(-int(kv))).inverse()
        a[k] = [u_inv * x for x in a[k]]
        U[k] = [u_inv * x for x in U[k]]
        pivot = a[k][k]
        for i in range(d):
            if i == k or a[i][k].is_zero_to_prec:
                continue
            fac = a[i][k] / pivot
            a[i] = [x - fac * y for x, y in zip(a[i], a[k])]
            U[i] = [x - fac * y for x, y in zip(U[i], U[k])]
        for j in range(d):
            if j == k or a[k][j].is_zero_to_prec:
                continue
            fac = a[k][j] / pivot
            for r, vr in zip(a, V):
                r[j] = r[j] - fac * r[k]
                vr[j] = vr[j] - fac * vr[k]
    return ks, PadicMatrix(f, U), PadicMatrix(f, V)


# -- idempotent lifting -------------------------------------------------------


def defect_valuation(E: PadicMatrix) -> int | float:
    """Minimal entry valuation of E@E - E."""
    return (E @ E - E).min_valuation()


def lift_idempotent(E0: PadicMatrix, max_iter: int = 64) -> PadicMatrix:
    """Newton iteration E <- 3E^2 - 2E^3 until E^2 = E at working
    precision; the defect valuation at least doubles per step."""
    D = E0 @ E0 - E0
    c = D.min_valuation()
    if all(x.is_exact_zero for r in D.rows for x in r):
        return E0
    if c <= 0:
        raise PrecisionError(
            f"idempotent defect must have positive valuation, got {c}")
    E = E0
    prev = c
    for _ in range(max_iter):
        E2 = E @ E
        E = E2.scale(E.field.from_int(3)) - (E2 @ E).scale(E.field.from_int(2))
        D = E @ E - E
        v = D.min_valuation()
        if v >= E.min_prec or v is INF:
            return E
        if v <= prev:
            raise PrecisionError("idempotent defect not decreasing")
        prev = v
    raise PrecisionError("idempotent lifting failed to converge")


def idempotent_trace_as_int(E: PadicMatrix) -> int:
    """Trace of an idempotent as the exact integer in [0, d] it equals at
    working precision."""
    t = E.trace()
    for k in range(E.d + 1):
        if (t - E.field.from_int(k)).is_zero_to_prec:
            return k
    raise PrecisionError("idempotent trace is not a small integer")


# -- trace-pairing Gram matrix ------------------------------------------------


def trace_of_product(A: PadicMatrix, B: PadicMatrix) -> PadicScalar:
    acc = None
    for i in range(A.d):
        for j in range(A.d):
            t = A.rows[i][j] * B.rows[j][i]
            acc = t if acc is None else acc + t
    return acc


def gram(mats) -> PadicMatrix:
    """Gram matrix of the trace pairing: entry (s, t) = tr(M_s @ M_t)."""
    mats = list(mats)
    if not mats:
        raise ConfigError("gram requires at least one matrix")
    f = mats[0].field
    n = len(mats)
    rows = [[None] * n for _ in range(n)]
    for s in range(n):
        for t in range(s, n):
            v = trace_of_product(mats[s], mats[t])
            rows[s][t] = v
            rows[t][s] = v
    return PadicMatrix(f, rows)
