"""Constructive physical-limit alignment for converging families.

Two pipelines:

* irreducible limit: a trace-pairing Gram certificate proves absolute
  irreducibility, trace coordinates reconstruct matrix entries from
  traces, and a covariant rank-one idempotent frame conjugates every
  member toward the limit;

* multiplicity-free limit: block idempotents are interpolated at a
  separating word and Newton-lifted, entrywise valuation profiles are
  collected over the word ball in an adapted frame, and an integer
  barycenter rebalancing produces diagonal conjugators that push all
  off-diagonal blocks to high valuation.

Every report carries the ball radius, the index range, and a start
index n0 below which stages are allowed to fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from fractions import Fraction
from itertools import product as iproduct

from .errors import (
    CoercivityError,
    ConfigError,
    NegativeVerdict,
    NoCertificateError,
    NoSeparatingWordError,
    PrecisionError,
    RankDeficiencyError,
    StageError,
)
from .families import LIMIT, RepFamily
from .field import INF, PadicScalar, delta_vpi
from .matrices import (
    PadicMatrix,
    charpoly,
    gram,
    idempotent_trace_as_int,
    lift_idempotent,
    rank_to_precision,
    solve,
    trace_of_product,
)
from .reporting import TailCertificate, TailPolicy, certify_tail, fmt_val
from .words import Word, format_word


# -- irreducibility certificate ------------------------------------------------


@dataclass(frozen=True)
class IrreducibilityCertificate:
    """d^2 ball words whose images span the full matrix algebra, witnessed
    by an invertible trace-pairing Gram matrix."""

    words: tuple[Word, ...]
    gram: PadicMatrix
    det_val: Fraction

    def to_json_dict(self) -> dict:
        return {
            "words": [format_word(w) for w in self.words],
            "det_valuation": fmt_val(self.det_val),
        }


def irreducibility_certificate(fam: RepFamily, idx, L: int) -> IrreducibilityCertificate:
    """Greedy shortlex search for a Gram certificate of absolute
    irreducibility at member idx (LIMIT for the limit)."""
    need = fam.d * fam.d
    ball = fam.ball(L)
    chosen_words: list[Word] = []
    chosen_mats: list[PadicMatrix] = []
    grows: list[list[PadicScalar]] = []
    for w in ball:
        M = fam.eval(idx, w)
        new_traces = [trace_of_product(M, B) for B in chosen_mats]
        diag = trace_of_product(M, M)
        n = len(chosen_mats) + 1
        rows = [grows[i] + [new_traces[i]] for i in range(n - 1)]
        rows.append(new_traces + [diag])
        G = PadicMatrix(fam.field, rows)
        if rank_to_precision(G) == n:
            chosen_words.append(w)
            chosen_mats.append(M)
            grows = rows
            if n == need:
                G_full = PadicMatrix(fam.field, rows)
                det = G_full.det()
                if det.is_zero_to_prec:
                    raise NoCertificateError(need - 1, need, idx)
                return IrreducibilityCertificate(
                    tuple(chosen_words), G_full,
                    Fraction(det.vpi, fam.field.e))
    raise NoCertificateError(len(chosen_words), need, idx)


# -- trace coordinates ----------------------------------------------------------


@dataclass(frozen=True)
class TraceCoordinates:
    """Coefficients a[k][i][j] reconstructing matrix entries from traces:
    entry (i, j) of the image of g equals sum_k a[k][i][j] tr(g g_k)."""

    cert: IrreducibilityCertificate
    idx: object
    a: tuple  # a[k][i][j] scalars


def trace_coordinates(cert: IrreducibilityCertificate, fam: RepFamily,
                      idx) -> TraceCoordinates:
    """Solve the certificate linear system at member idx."""
    f = fam.field
    d = fam.d
    if cert.det_val == INF:
        raise PrecisionError("certificate determinant is not invertible")
    if cert.det_val * f.e >= f.prec / 2:
        raise PrecisionError(
            f"certificate too ill-conditioned: e*det_val = "
            f"{cert.det_val * f.e} >= prec/2 = {f.prec / 2}")
    mats = [fam.eval(idx, w) for w in cert.words]
    G = gram(mats)
    if rank_to_precision(G) < len(mats):
        raise NoCertificateError(rank_to_precision(G), len(mats), idx)
    # right-hand sides: one column per matrix position (i, j)
    rhs_rows = []
    for s in range(len(mats)):
        row = []
        for i in range(d):
            for j in range(d):
                row.append(mats[s].rows[i][j])
        rhs_rows.append(row)
    X = solve(G, PadicMatrix(f, rhs_rows))
    a = tuple(
        tuple(tuple(X.rows[k][i * d + j] for j in range(d)) for i in range(d))
        for k in range(len(mats)))
    return TraceCoordinates(cert, idx, a)


def reconstruction_residual(coords: TraceCoordinates, fam: RepFamily,
                            L: int) -> Fraction | float:
    """Minimal valuation of (reconstructed - direct) entries over the
    ball; the contract is >= prec - 2 e det_val in pi-digit units."""
    f = fam.field
    d = fam.d
    idx = coords.idx
    cert_mats = [fam.eval(idx, w) for w in coords.cert.words]
    worst = INF
    for w in fam.ball(L):
        M = fam.eval(idx, w)
        traces = [trace_of_product(M, B) for B in cert_mats]
        for i in range(d):
            for j in range(d):
                acc = None
                for k, t in enumerate(traces):
                    term = coords.a[k][i][j] * t
                    acc = term if acc is None else acc + term
                v, _ = delta_vpi(acc, M.rows[i][j])
                if v < worst:
                    worst = v
    return worst if worst is INF else Fraction(worst, f.e)


# -- irreducible-limit alignment -------------------------------------------------


@dataclass(frozen=True)
class IrreducibleAlignment:
    """Per-member conjugators aligning the family to its irreducible
    limit, with entrywise delta diagnostics."""

    cert: IrreducibilityCertificate
    frame_words: tuple[Word, ...]
    n_range: tuple[int, ...]
    n0: int
    conjugators: dict
    deltas: tuple
    skipped: tuple
    tail_cert: TailCertificate
    L: int

    def to_json_dict(self) -> dict:
        return {
            "pipeline": "irreducible-limit",
            "ball_radius": self.L,
            "n_range": list(self.n_range),
            "n0": self.n0,
            "certificate": self.cert.to_json_dict(),
            "frame_words": [format_word(w) for w in self.frame_words],
            "deltas": [fmt_val(v) for v in self.deltas],
            "skipped": [{"n": n, "reason": r} for n, r in self.skipped],
            "tail_certificate": self.tail_cert.to_json_dict(),
        }


def _matrix_unit_combination(fam: RepFamily, cert, i: int, j: int):
    """Coefficients c_k with sum_k c_k rho_lim(g_k) = E_(i,j)."""
    f = fam.field
    d = fam.d
    mats = [fam.eval(LIMIT, w) for w in cert.words]
    rows = []
    for a in range(d):
        for b in range(d):
            rows.append([m.rows[a][b] for m in mats])
    rhs = [[f.one() if (a, b) == (i, j) else f.zero()]
           for a in range(d) for b in range(d)]
    # pad rhs to square for the solver
    n = d * d
    rhs_sq = [[rhs[r][0]] + [f.zero()] * (n - 1) for r in range(n)]
    X = solve(PadicMatrix(f, rows), PadicMatrix(f, rhs_sq))
    return [X.rows[k][0] for k in range(n)]


def _combine(mats, coeffs) -> PadicMatrix:
    acc = None
    for c, M in zip(coeffs, mats):
        t = M.scale(c)
        acc = t if acc is None else acc + t
    return acc


def _frame_words(fam: RepFamily, L: int, v0) -> tuple[Word, ...]:
    """Shortlex-greedy words h_i with columns rho_lim(h_i) v0 spanning."""
    f = fam.field
    d = fam.d
    cols: list[list[PadicScalar]] = []
    words: list[Word] = []
    for w in fam.ball(L):
        c = fam.eval(LIMIT, w).mul_vector(v0)
        if _col_rank(f, cols + [c]) == len(cols) + 1:
            cols.append(c)
            words.append(w)
            if len(words) == d:
                return tuple(words)
    raise NoCertificateError(len(words), d, LIMIT)


def _col_rank(f, cols) -> int:
    if not cols:
        return 0
    d = len(cols[0])
    grid = [[cols[j][i] for j in range(len(cols))] for i in range(d)]
    # pad to square
    n = max(d, len(cols))
    z = f.zero()
    a = [[grid[i][j] if i < d and j < len(cols) else z for j in range(n)]
         for i in range(n)]
    return rank_to_precision(PadicMatrix(f, a))


def _pick_column(E: PadicMatrix):
    """Column of minimal valuation (first among ties)."""
    best, best_v = 0, INF
    for j in range(E.d):
        v = min(E.rows[i][j].vmin_pi for i in range(E.d))
        if v < best_v:
            best, best_v = j, v
    if best_v is INF:
        raise PrecisionError("idempotent has no visible column")
    return E.column(best)


def align_irreducible(fam: RepFamily, L: int, n_range,
                      policy: TailPolicy = TailPolicy()) -> IrreducibleAlignment:
    """Theorem pipeline for an irreducible limit: certificate, covariant
    rank-one idempotent, frame conjugation, entrywise deltas."""
    ns = tuple(n_range)
    cert = irreducibility_certificate(fam, LIMIT, L)
    coeffs = _matrix_unit_combination(fam, cert, 0, 0)
    lim_cert_mats = [fam.eval(LIMIT, w) for w in cert.words]
    eps_lim = lift_idempotent(_combine(lim_cert_mats, coeffs))
    if idempotent_trace_as_int(eps_lim) != 1:
        raise PrecisionError("limit idempotent is not rank one")
    v_lim = _pick_column(eps_lim)
    hwords = _frame_words(fam, L, v_lim)
    P_lim = PadicMatrix(fam.field,
                        zip(*[fam.eval(LIMIT, h).mul_vector(v_lim)
                              for h in hwords]))
    P_lim_inv = P_lim.inverse()
    ball = fam.ball(L)
    sigma_lim = {w: P_lim_inv @ fam.eval(LIMIT, w) @ P_lim for w in ball}

    deltas = []
    conjugators = {}
    skipped = []
    n0 = None
    for n in ns:
        try:
            mats_n = [fam.eval(n, w) for w in cert.words]
            G_n = gram(mats_n)
            if rank_to_precision(G_n) < len(mats_n):
                raise NoCertificateError(rank_to_precision(G_n),
                                         len(mats_n), n)
            eps_n = lift_idempotent(_combine(mats_n, coeffs))
            if idempotent_trace_as_int(eps_n) != 1:
                raise PrecisionError("member idempotent is not rank one")
            v_n = _pick_column(eps_n)
            P_n = PadicMatrix(fam.field,
                              zip(*[fam.eval(n, h).mul_vector(v_n)
                                    for h in hwords]))
            P_n_inv = P_n.inverse()
            worst = INF
            for w in ball:
                A = P_n_inv @ fam.eval(n, w) @ P_n
                B = sigma_lim[w]
                for i in range(fam.d):
                    for j in range(fam.d):
                        v, _ = delta_vpi(A.rows[i][j], B.rows[i][j])
                        if v < worst:
                            worst = v
            deltas.append(worst if worst is INF
                          else Fraction(worst, fam.field.e))
            conjugators[n] = P_n
            if n0 is None:
                n0 = n
        except (NegativeVerdict, PrecisionError, RankDeficiencyError) as ex:
            skipped.append((n, str(ex)))
            deltas.append(-INF)
    if n0 is None:
        raise NoCertificateError(0, fam.d * fam.d, ns[0])
    kept = [d for d in deltas if d != -INF]
    tail = certify_tail(kept, policy)
    return IrreducibleAlignment(cert, hwords, ns, n0, conjugators,
                                tuple(deltas), tuple(skipped), tail, L)


# -- block idempotents ------------------------------------------------------------


@dataclass
class BlockStructure:
    """Orthogonal block idempotents at every index, their adapted frames,
    and the separating-word data that produced them."""

    s: int
    dims: tuple[int, ...]
    word: Word
    group_values: tuple  # per block: tuple of (eigenvalue, multiplicity)
    idempotents: dict  # idx -> tuple of matrices
    frames: dict  # idx -> adapted-frame matrix
    frame_inverses: dict
    iii_values: dict = dfield(default_factory=dict)  # n -> min valuation
    iii_cert: TailCertificate | None = None
    pair_radius: int = 0

    def block_of(self, alpha: int) -> int:
        acc = 0
        for i, di in enumerate(self.dims):
            acc += di
            if alpha < acc:
                return i
        raise IndexError(alpha)

    def to_json_dict(self) -> dict:
        out = {
            "s": self.s,
            "dims": list(self.dims),
            "separating_word": format_word(self.word),
            "pair_radius": self.pair_radius,
            "iii_values": {str(n): fmt_val(v)
                           for n, v in sorted(self.iii_values.items())},
        }
        if self.iii_cert is not None:
            out["iii_certificate"] = self.iii_cert.to_json_dict()
        return out


def _eigen_groupings(eigen, dims):
    """Assignments of distinct eigenvalues to blocks matching declared
    dims, in deterministic order."""
    if dims is None:
        yield tuple((ev,) for ev in eigen)
        return
    s = len(dims)
    for assign in iproduct(range(s), repeat=len(eigen)):
        totals = [0] * s
        for (ev, mult), b in zip(eigen, assign):
            totals[b] += mult
        if totals != list(dims):
            continue
        groups = tuple(
            tuple(ev for ev, b in zip(eigen, assign) if b == i)
            for i in range(s))
        yield groups


def _interp_idempotents(M: PadicMatrix, groups):
    """First-order spectral projectors onto eigenvalue groups, by
    Lagrange interpolation with multiplicities, ready for Newton
    lifting."""
    f = M.field
    d = M.d
    all_vals = [ev for g in groups for ev in g]
    out = []
    for gi, group in enumerate(groups):
        acc = None
        for lam, mult in group:
            proj = PadicMatrix.identity(f, d)
            for mu, mmult in all_vals:
                if mu is lam:
                    continue
                den = lam - mu
                if den.is_zero_to_prec:
                    raise NoSeparatingWordError(
                        "eigenvalue groups collide to precision")
                fac = (M - PadicMatrix.identity(f, d).scale(mu)) \
                    .scale(den.inverse())
                for _ in range(mmult):
                    proj = proj @ fac
            acc = proj if acc is None else acc + proj
        out.append(acc)
    return out


def _lift_orthogonal(raw, field) -> tuple[PadicMatrix, ...]:
    """Sequentially lift approximate idempotents to an exact orthogonal
    partition of unity at working precision."""
    d = raw[0].d
    one = PadicMatrix.identity(field, d)
    lifted = []
    for i, E0 in enumerate(raw):
        if i == len(raw) - 1:
            rest = one
            for E in lifted:
                rest = rest - E
            cand = rest
            if (cand @ cand - cand).min_valuation() < cand.min_prec:
                cand = lift_idempotent(cand)
            lifted.append(cand)
            break
        work = E0
        for E in lifted:
            c = one - E
            work = c @ work @ c
        lifted.append(lift_idempotent(work))
    return tuple(lifted)


def _greedy_frame(blocks_idem, field) -> PadicMatrix:
    """Adapted basis: for each block, independent columns of its
    idempotent, greedily by column order."""
    cols = []
    for E, di in blocks_idem:
        got = 0
        for j in range(E.d):
            if got == di:
                break
            c = E.column(j)
            if _col_rank(field, cols + [c]) == len(cols) + 1:
                cols.append(c)
                got += 1
        if got < di:
            raise PrecisionError(
                f"could not extract {di} independent columns from idempotent")
    return PadicMatrix(field, zip(*cols))


def block_idempotents(fam: RepFamily, L: int, n_range, dims=None,
                      policy: TailPolicy = TailPolicy(),
                      pair_radius: int = 2) -> BlockStructure:
    """Find a separating ball word and build lifted block idempotents for
    every member index and the limit.

    ``dims``: declared block dimensions (fixture annotation); when None,
    the grouping with the largest number of residue-distinguished blocks
    on the ball is used.
    """
    ns = tuple(n_range)
    d = fam.d
    if dims is not None:
        dims = tuple(dims)
        if sum(dims) != d:
            raise NoSeparatingWordError(
                f"declared dims {dims} do not sum to d = {d}")
        if len(dims) == 1:
            return _trivial_blocks(fam, ns, dims)
    if d == 1:
        return _trivial_blocks(fam, ns, (1,))

    found = None
    best_s = 1
    for w in fam.ball(L):
        if not w:
            continue
        cp = charpoly(fam.eval(LIMIT, w))
        eigen = cp.eigen_data
        if eigen is None or len(eigen) < 2:
            continue
        if dims is not None:
            for groups in _eigen_groupings(eigen, dims):
                cand = _validated_blocks(fam, w, groups, ns)
                if cand is not None:
                    found = cand
                    break
            if found is not None:
                break
        else:
            if len(eigen) > best_s:
                groups = tuple((ev,) for ev in eigen)
                cand = _validated_blocks(fam, w, groups, ns)
                if cand is not None:
                    found = cand
                    best_s = len(eigen)
                    if best_s == d:
                        break
    if found is None:
        raise NoSeparatingWordError(
            f"no separating word within ball radius {L}"
            + (f" for declared dims {dims}" if dims else ""))
    _record_iii(fam, found, ns, policy, pair_radius)
    return found


def _trivial_blocks(fam, ns, dims) -> BlockStructure:
    one = PadicMatrix.identity(fam.field, fam.d)
    idem = {idx: (one,) for idx in ns + (LIMIT,)}
    frames = {idx: one for idx in ns + (LIMIT,)}
    return BlockStructure(1, tuple(dims), (), ((),), idem, frames,
                          dict(frames))


def _validated_blocks(fam, w, groups, ns) -> BlockStructure | None:
    """Build and validate idempotents for one candidate grouping; None
    when the construction fails."""
    dims = tuple(sum(m for _, m in g) for g in groups)
    try:
        idem = {}
        frames = {}
        finv = {}
        for idx in ns + (LIMIT,):
            M = fam.eval(idx, w)
            raw = _interp_idempotents(M, groups)
            lifted = _lift_orthogonal(raw, fam.field)
            for E, di in zip(lifted, dims):
                if idempotent_trace_as_int(E) != di:
                    return None
            for i in range(len(lifted)):
                for j in range(len(lifted)):
                    if i != j:
                        prod = lifted[i] @ lifted[j]
                        if prod.min_valuation() < prod.min_prec:
                            return None
            Q = _greedy_frame(list(zip(lifted, dims)), fam.field)
            idem[idx] = lifted
            frames[idx] = Q
            finv[idx] = Q.inverse()
        return BlockStructure(len(dims), dims, w, groups, idem, frames, finv)
    except (PrecisionError, RankDeficiencyError, NegativeVerdict):
        return None


def _record_iii(fam, blocks: BlockStructure, ns, policy, pair_radius):
    """Record min over ball pairs of v(tr(e_i x e_j y e_i)), i != j."""
    if blocks.s < 2 or pair_radius < 1:
        return
    pball = fam.ball(pair_radius)
    vals = {}
    for n in ns:
        Es = blocks.idempotents[n]
        lefts = {}
        rights = {}
        for i in range(blocks.s):
            for j in range(blocks.s):
                if i == j:
                    continue
                lefts[(i, j)] = [Es[i] @ fam.eval(n, x) @ Es[j] for x in pball]
                rights[(i, j)] = [Es[j] @ fam.eval(n, y) @ Es[i] for y in pball]
        worst = INF
        for i in range(blocks.s):
            for j in range(blocks.s):
                if i == j:
                    continue
                for Lx in lefts[(i, j)]:
                    for Ry in rights[(i, j)]:
                        t = trace_of_product(Lx, Ry)
                        if t.vmin_pi < worst:
                            worst = t.vmin_pi
        vals[n] = worst if worst is INF else Fraction(worst, fam.field.e)
    blocks.iii_values = vals
    blocks.iii_cert = certify_tail([vals[n] for n in ns], policy)
    blocks.pair_radius = pair_radius


# -- valuation profile -------------------------------------------------------------


@dataclass(frozen=True)
class ValuationProfile:
    """Infimal entry valuations over the ball in the adapted frame.

    Valuations are integers in pi-digit units (INF for entries that are
    exactly zero over the whole ball); block-level entries are minima
    over the corresponding frame positions.
    """

    blocks: BlockStructure
    L: int
    n_range: tuple[int, ...]
    x_entry: dict  # idx -> [alpha][beta] valuation
    x_block: dict  # idx -> [i][j] valuation
    triangle_N: int
    block_N_prime: int
    coercivity: tuple  # c_n per member index, pi-digit units
    coercivity_cert: TailCertificate

    def to_json_dict(self) -> dict:
        e = self.blocks.frames[LIMIT].field.e

        def norm(v):
            return fmt_val(v if v is INF else Fraction(v, e))

        return {
            "ball_radius": self.L,
            "n_range": list(self.n_range),
            "triangle_N": norm(self.triangle_N),
            "block_N_prime": norm(self.block_N_prime),
            "coercivity": [norm(c) for c in self.coercivity],
            "coercivity_certificate": self.coercivity_cert.to_json_dict(),
            "x_block": {("lim" if idx is LIMIT else str(idx)):
                        [[norm(v) for v in row] for row in xb]
                        for idx, xb in self.x_block.items()},
        }


def valuation_profile(fam: RepFamily, blocks: BlockStructure, L: int,
                      n_range,
                      policy: TailPolicy = TailPolicy()) -> ValuationProfile:
    """Collect x[i][j] = min over ball words of the entry valuation in
    the adapted frame, plus triangle and block constants and the
    coercivity sequence."""
    ns = tuple(n_range)
    d = fam.d
    s = blocks.s
    x_entry = {}
    x_block = {}
    for idx in ns + (LIMIT,):
        Q = blocks.frames[idx]
        Qi = blocks.frame_inverses[idx]
        xe = [[INF] * d for _ in range(d)]
        for w in fam.ball(L):
            A = Qi @ fam.eval(idx, w) @ Q
            for a in range(d):
                for b in range(d):
                    v = A.rows[a][b].vmin_pi
                    if v < xe[a][b]:
                        xe[a][b] = v
        xb = [[INF] * s for _ in range(s)]
        for a in range(d):
            for b in range(d):
                i, j = blocks.block_of(a), blocks.block_of(b)
                if xe[a][b] < xb[i][j]:
                    xb[i][j] = xe[a][b]
        x_entry[idx] = xe
        x_block[idx] = xb
    tri = 0
    for idx in ns:
        xb = x_block[idx]
        for i in range(s):
            for j in range(s):
                for k in range(s):
                    if len({i, j, k}) < 3:
                        continue
                    if xb[i][j] is INF or xb[i][k] is INF or xb[k][j] is INF:
                        continue
                    tri = max(tri, xb[i][j] - xb[i][k] - xb[k][j])
    npr = 0
    for idx in ns + (LIMIT,):
        xe, xb = x_entry[idx], x_block[idx]
        for a in range(d):
            for b in range(d):
                i, j = blocks.block_of(a), blocks.block_of(b)
                if xe[a][b] is not INF and xb[i][j] is not INF:
                    npr = max(npr, xe[a][b] - xb[i][j])
    coer = []
    for idx in ns:
        xb = x_block[idx]
        c = INF
        for i in range(s):
            for j in range(s):
                if i != j:
                    c = min(c, xb[i][j] + xb[j][i])
        coer.append(c)
    scaled = [c if c is INF else Fraction(c, fam.field.e) for c in coer]
    cert = certify_tail(scaled, policy)
    return ValuationProfile(blocks, L, ns, x_entry, x_block, tri, npr,
                            tuple(coer), cert)


# -- barycenter rebalancing ----------------------------------------------------------


@dataclass(frozen=True)
class RebalancePlan:
    """Integer exponent vectors u[n] and the diagonal pi-power conjugators
    they induce, with guaranteed margins m_n (pi-digit units)."""

    profile: ValuationProfile
    u: dict  # n -> tuple of ints (normalized so max is 0)
    margins: tuple

    def conjugator(self, fam: RepFamily, n: int) -> PadicMatrix:
        """diag(pi**u_i) expanded to the adapted-frame coordinates."""
        f = fam.field
        blocks = self.profile.blocks
        diag = []
        for alpha in range(fam.d):
            diag.append(f.pi_power(self.u[n][blocks.block_of(alpha)]))
        z = f.zero()
        return PadicMatrix(f, [[diag[i] if i == j else z
                                for j in range(fam.d)]
                               for i in range(fam.d)])

    def to_json_dict(self) -> dict:
        return {
            "u": {str(n): list(ui) for n, ui in sorted(self.u.items())},
            "margins": [fmt_val(m) for m in self.margins],
        }


def rebalance(profile: ValuationProfile,
              require_coercivity: bool = True) -> RebalancePlan:
    """Barycenter exponents from the block valuation profile.

    Entries at +INF (exactly-zero blocks over the ball) are capped at the
    working precision for the barycenter average; the margin invariant
    m_n >= floor(c_n / d) - N - 1 is checked on the recorded data.
    """
    blocks = profile.blocks
    s = blocks.s
    if require_coercivity and s > 1 and not profile.coercivity_cert.passes:
        raise CoercivityError(
            "off-diagonal coercivity not certified increasing: "
            + str(profile.coercivity_cert.to_json_dict()))
    f = profile.blocks.frames[LIMIT].field
    cap = f.prec
    shift = max(0, profile.triangle_N)
    u_all = {}
    margins = []
    for pos, n in enumerate(profile.n_range):
        xb = profile.x_block[n]

        def x(i, j):
            v = xb[i][j]
            v = cap if v is INF else v
            return v + shift

        if s == 1:
            u_all[n] = (0,)
            margins.append(INF)
            continue
        sums = [Fraction(0)] * s
        for l in range(s):
            for i in range(s):
                if i != l:
                    sums[i] += Fraction(-x(l, i), s)
        u = [int(v // 1) for v in sums]
        mx = max(u)
        u = tuple(ui - mx for ui in u)
        m = INF
        for i in range(s):
            for j in range(s):
                if i != j and xb[i][j] is not INF:
                    m = min(m, xb[i][j] - (u[i] - u[j]))
        u_all[n] = u
        margins.append(m)
        cn = profile.coercivity[pos]
        if cn is not INF and m is not INF:
            # proven bound for the floor-of-barycenter construction
            bound = (cn + 2 * shift) // s - shift - 1
            if m < bound:
                raise PrecisionError(
                    f"margin invariant violated at n={n}: {m} < {bound}")
    return RebalancePlan(profile, u_all, tuple(margins))


# -- multiplicity-free alignment -------------------------------------------------------


@dataclass(frozen=True)
class MultiplicityFreeAlignment:
    """Output of the uniform-alignment pipeline: block structure,
    profile, rebalancing plan, conjugators, and delta diagnostics."""

    blocks: BlockStructure
    profile: ValuationProfile
    plan: RebalancePlan
    n_range: tuple[int, ...]
    n0: int
    conjugators: dict  # n -> full conjugator (adapted frame @ diag)
    offdiag_deltas: tuple
    diag_trace_deltas: tuple
    offdiag_cert: TailCertificate
    diag_cert: TailCertificate
    L: int

    def aligned(self, fam: RepFamily, n, word) -> PadicMatrix:
        C = self.conjugators[n]
        return C.inverse() @ fam.eval(n, word) @ C

    def to_json_dict(self) -> dict:
        return {
            "pipeline": "multiplicity-free",
            "ball_radius": self.L,
            "n_range": list(self.n_range),
            "n0": self.n0,
            "blocks": self.blocks.to_json_dict(),
            "profile": self.profile.to_json_dict(),
            "plan": self.plan.to_json_dict(),
            "offdiag_deltas": [fmt_val(v) for v in self.offdiag_deltas],
            "diag_trace_deltas": [fmt_val(v) for v in self.diag_trace_deltas],
            "offdiag_certificate": self.offdiag_cert.to_json_dict(),
            "diag_certificate": self.diag_cert.to_json_dict(),
        }


def align_multiplicity_free(fam: RepFamily, L: int, n_range, dims=None,
                            policy: TailPolicy = TailPolicy(),
                            pair_radius: int = 2) -> MultiplicityFreeAlignment:
    """Full pipeline: member irreducibility, block idempotents, valuation
    profile, rebalancing, conjugation, delta certification.

    Members that are not absolutely irreducible on the ball are rejected
    (the triangular counterexample family fails here); limits whose
    spectrum never separates are rejected at the block stage.
    """
    ns = tuple(n_range)
    # stage 1: member irreducibility; failures before n0 are tolerated
    n0 = None
    first_reason = None
    for n in ns:
        try:
            irreducibility_certificate(fam, n, L)
            if n0 is None:
                n0 = n
        except (NegativeVerdict, PrecisionError, RankDeficiencyError,
                ConfigError) as ex:
            if first_reason is None:
                first_reason = ex
            if n0 is not None:
                raise StageError("member-irreducibility", ex)
    if n0 is None:
        raise StageError("member-irreducibility", first_reason)
    live = tuple(n for n in ns if n >= n0)
    # stage 2: block idempotents (errors carry their own stage)
    blocks = block_idempotents(fam, L, live, dims, policy, pair_radius)
    # stage 3: valuation profile
    profile = valuation_profile(fam, blocks, L, live, policy)
    # stage 4: rebalancing
    plan = rebalance(profile)
    # stage 5: conjugation and deltas
    d = fam.d
    ball = fam.ball(L)
    Q_lim = blocks.frames[LIMIT]
    Qi_lim = blocks.frame_inverses[LIMIT]
    lim_block = {w: Qi_lim @ fam.eval(LIMIT, w) @ Q_lim for w in ball}
    conjugators = {}
    off_deltas = []
    diag_deltas = []
    for n in live:
        C = blocks.frames[n] @ plan.conjugator(fam, n)
        conjugators[n] = C
        Ci = C.inverse()
        worst_off = INF
        worst_diag = INF
        for w in ball:
            A = Ci @ fam.eval(n, w) @ C
            B = lim_block[w]
            for a in range(d):
                for b in range(d):
                    if blocks.block_of(a) != blocks.block_of(b):
                        v = A.rows[a][b].vmin_pi
                        if v < worst_off:
                            worst_off = v
            for i in range(blocks.s):
                ta = _block_trace(A, blocks, i)
                tb = _block_trace(B, blocks, i)
                v, _ = delta_vpi(ta, tb)
                if v < worst_diag:
                    worst_diag = v
        e = fam.field.e
        off_deltas.append(worst_off if worst_off is INF
                          else Fraction(worst_off, e))
        diag_deltas.append(worst_diag if worst_diag is INF
                           else Fraction(worst_diag, e))
    off_cert = certify_tail(off_deltas, policy)
    diag_cert = certify_tail(diag_deltas, policy)
    return MultiplicityFreeAlignment(
        blocks, profile, plan, ns, n0, conjugators,
        tuple(off_deltas), tuple(diag_deltas), off_cert, diag_cert, L)


def _block_trace(A: PadicMatrix, blocks: BlockStructure, i: int) -> PadicScalar:
    acc = None
    for a in range(A.d):
        if blocks.block_of(a) == i:
            t = A.rows[a][a]
            acc = t if acc is None else acc + t
    return acc
