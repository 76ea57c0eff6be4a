"""Matrix algebra tests: charpoly, Smith form, idempotents, Gram."""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padic_limits import FieldSpec, RankDeficiencyError
from padic_limits.matrices import (
    PadicMatrix,
    charpoly,
    defect_valuation,
    gram,
    idempotent_trace_as_int,
    lift_idempotent,
    rank_to_precision,
    smith_form,
    solve,
    trace_of_product,
)

F5 = FieldSpec(5, 1, 16)
INF = math.inf


def _rand_matrix(field, d, rng, span=50):
    return PadicMatrix.from_rows(
        field, [[rng.randrange(-span, span) for _ in range(d)]
                for _ in range(d)])


def _rand_invertible(field, d, rng):
    while True:
        M = _rand_matrix(field, d, rng)
        if not M.det().is_zero_to_prec and M.det().vmin_pi == 0:
            return M


def test_charpoly_unipotent():
    cp = charpoly(PadicMatrix.from_rows(F5, [[1, 1], [0, 1]]))
    assert (cp.coeffs[2] - F5.one()).is_zero_to_prec
    assert (cp.coeffs[1] + F5.from_int(2)).is_zero_to_prec
    assert (cp.coeffs[0] - F5.one()).is_zero_to_prec
    assert cp.disc.is_zero_to_prec
    assert (cp.trace() - F5.from_int(2)).is_zero_to_prec


def test_charpoly_diagonal_disc():
    a, b = 2, 7
    cp = charpoly(PadicMatrix.from_rows(F5, [[a, 0], [0, b]]))
    assert (cp.disc - F5.from_int((a - b) ** 2)).is_zero_to_prec
    eigen = cp.eigen_data
    assert sorted(v.unit[0] % 25 for v, _ in eigen) == [2, 7]


def test_charpoly_conjugation_invariant():
    rng = random.Random(4)
    for _ in range(5):
        M = _rand_matrix(F5, 3, rng)
        C = _rand_invertible(F5, 3, rng)
        a = charpoly(C.inverse() @ M @ C).coeffs
        b = charpoly(M).coeffs
        assert all((x - y).vmin_pi >= F5.prec - 2 for x, y in zip(a, b))


def test_charpoly_coeffs_are_symmetric_functions_of_eigenvalues():
    vals = [2, 3, 11]
    M = PadicMatrix.from_rows(
        F5, [[vals[i] if i == j else 0 for j in range(3)] for i in range(3)])
    cp = charpoly(M)
    e1 = sum(vals)
    e2 = sum(vals[i] * vals[j] for i in range(3) for j in range(i + 1, 3))
    e3 = vals[0] * vals[1] * vals[2]
    # det(xI - M) = x^3 - e1 x^2 + e2 x - e3
    assert (cp.coeffs[2] + F5.from_int(e1)).is_zero_to_prec
    assert (cp.coeffs[1] - F5.from_int(e2)).is_zero_to_prec
    assert (cp.coeffs[0] + F5.from_int(e3)).is_zero_to_prec


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_trace_of_product_symmetric(sa, sb):
    rng_a, rng_b = random.Random(sa), random.Random(sb)
    A, B = _rand_matrix(F5, 3, rng_a), _rand_matrix(F5, 3, rng_b)
    lhs = trace_of_product(A, B)
    rhs = trace_of_product(B, A)
    assert (lhs - rhs).is_zero_to_prec


def test_smith_examples():
    ks, _, _ = smith_form(PadicMatrix.from_rows(F5, [[5, 0], [0, 1]]))
    assert ks == [0, 1]
    ks2, _, _ = smith_form(PadicMatrix.from_rows(F5, [[2, 1], [1, 2]]))
    assert ks2 == [0, 0]  # det 3 is a unit
    with pytest.raises(RankDeficiencyError):
        smith_form(PadicMatrix.from_rows(F5, [[5, 5], [5, 5]]))


def test_smith_transform_contract():
    rng = random.Random(11)
    for _ in range(6):
        M = _rand_matrix(F5, 3, rng, span=200)
        if M.det().is_zero_to_prec:
            continue
        ks, U, V = smith_form(M)
        assert ks == sorted(ks)
        S = U @ M @ V
        for i in range(3):
            for j in range(3):
                want = F5.pi_power(ks[i]) if i == j else F5.zero()
                assert (S.rows[i][j] - want).vmin_pi >= F5.prec - 4
        assert U.det().vmin_pi == 0 and V.det().vmin_pi == 0
        # product of invariants agrees with det up to a unit
        total = sum(ks)
        assert M.det().vmin_pi == total


def test_smith_negative_invariants():
    M = PadicMatrix.from_rows(F5, [[Fraction(1, 5), 0], [0, 1]])
    ks, _, _ = smith_form(M)
    assert ks == [-1, 0]


def test_lift_idempotent_identity_fixed():
    I = PadicMatrix.identity(F5, 2)
    assert lift_idempotent(I) == I


def test_lift_idempotent_scalar_one_step_oracle():
    # one Newton step on 6: 3*36 - 2*216 = -324 = 1 mod 25
    assert (3 * 36 - 2 * 216) % 25 == 1
    E = lift_idempotent(PadicMatrix.from_rows(F5, [[6]]))
    assert (E.rows[0][0] - F5.one()).is_zero_to_prec


def test_lift_idempotent_two_steps_mod_625():
    # scalar oracle: two iterations of a -> 3a^2 - 2a^3 modulo 5^4
    def step(a):
        return (3 * a * a - 2 * a ** 3) % 5 ** 4

    assert step(step(6)) == 1
    assert step(step(5)) == 0
    F = FieldSpec(5, 1, 4)
    E = lift_idempotent(PadicMatrix.from_rows(F, [[6, 0], [0, 5]]))
    assert E.rows[0][0].unit[0] % 625 == 1
    assert E.rows[1][1].is_zero_to_prec


def test_lift_idempotent_defect_doubles():
    E = PadicMatrix.from_rows(F5, [[6, 5], [0, 5]])
    prev = defect_valuation(E)
    assert prev == 1
    three, two = F5.from_int(3), F5.from_int(2)
    while True:
        E2 = E @ E
        E = E2.scale(three) - (E2 @ E).scale(two)
        cur = defect_valuation(E)
        if cur is INF or cur >= E.min_prec:
            break
        assert cur >= 2 * prev
        prev = cur


def test_idempotent_trace_integer():
    E = lift_idempotent(PadicMatrix.from_rows(F5, [[6, 0], [0, 5]]))
    assert idempotent_trace_as_int(E) == 1


def test_gram_minimal_and_commutative():
    one = PadicMatrix.identity(F5, 1)
    G = gram([one])
    assert (G.rows[0][0] - F5.one()).is_zero_to_prec
    D = PadicMatrix.from_rows(F5, [[2, 0], [0, 3]])
    ws = [PadicMatrix.identity(F5, 2), D, D @ D, D @ D @ D]
    G2 = gram(ws)
    assert G2.det().is_zero_to_prec  # rank of the trace form <= 2 < 4
    assert rank_to_precision(G2) == 2


def test_gram_unipotent_pair_hand_oracle():
    # sixteen 2x2 integer products reduced modulo 5^16
    p, m = 5, 5 ** 16

    def mul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(2)) % m
                 for j in range(2)] for i in range(2)]

    def tr(A):
        return (A[0][0] + A[1][1]) % m

    I2 = [[1, 0], [0, 1]]
    u = [[1, 1], [0, 1]]
    l = [[1, 0], [p, 1]]
    words = [I2, u, l, mul(u, l)]
    G_int = [[tr(mul(a, b)) for b in words] for a in words]
    u5 = PadicMatrix.from_rows(F5, u)
    l5 = PadicMatrix.from_rows(F5, l)
    ws = [PadicMatrix.identity(F5, 2), u5, l5, u5 @ l5]
    G = gram(ws)
    for i in range(4):
        for j in range(4):
            assert G.rows[i][j].unit[0] * 5 ** G.rows[i][j].vpi % m \
                == G_int[i][j] % m or (G.rows[i][j]
                                       - F5.from_int(G_int[i][j])).is_zero_to_prec
    det = G.det()
    assert not det.is_zero_to_prec and det.vmin_pi < INF


def test_solve_round_trip():
    rng = random.Random(3)
    A = _rand_invertible(F5, 3, rng)
    B = _rand_matrix(F5, 3, rng)
    X = solve(A, B)
    R = A @ X - B
    assert all(x.vmin_pi >= F5.prec - 2 for r in R.rows for x in r)
