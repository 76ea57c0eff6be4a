"""Hensel lifting and root extraction tests."""

import random

import pytest

from padic_limits import FieldSpec, Poly, PrecisionError, hensel_lift_root, \
    padic_exp, roots_monic

F5 = FieldSpec(5, 1, 16)
F7 = FieldSpec(7, 1, 20)


def test_exact_root_is_fixed():
    P = Poly.from_ints(F5, [-1, 0, 1])  # x^2 - 1
    r = hensel_lift_root(P, F5.from_int(1))
    assert (r - F5.one()).is_zero_to_prec


def test_sqrt2_mod_49_brute_force_oracle():
    wanted = [x for x in range(49) if (x * x - 2) % 49 == 0 and x % 7 == 3]
    assert wanted == [10]
    P = Poly.from_ints(F7, [-2, 0, 1])
    r = hensel_lift_root(P, F7.from_int(3))
    assert r.unit[0] % 49 == 10
    assert P(r).is_zero_to_prec


def test_ramified_root_not_liftable():
    P = Poly.from_ints(F5, [-5, 0, 1])  # x^2 - 5
    with pytest.raises(PrecisionError):
        hensel_lift_root(P, F5.from_int(0))


def test_quadratic_convergence_defect_doubles():
    P = Poly.from_ints(F7, [-2, 0, 1])
    D = P.derivative()
    x = F7.from_int(3)
    prev = P(x).vmin_pi
    for _ in range(4):
        x = x - P(x) / D(x)
        cur = P(x).vmin_pi
        if cur >= F7.prec:
            break
        assert cur >= 2 * prev  # simple residue root: no derivative loss
        prev = cur


def test_lift_stable_under_increasing_precision():
    lo, hi = FieldSpec(7, 1, 12), FieldSpec(7, 1, 28)
    r_lo = hensel_lift_root(Poly.from_ints(lo, [-2, 0, 1]), lo.from_int(3))
    r_hi = hensel_lift_root(Poly.from_ints(hi, [-2, 0, 1]), hi.from_int(3))
    m = 7 ** r_lo.prec
    assert r_hi.unit[0] % m == r_lo.unit[0] % m


def test_random_polynomials_with_simple_residue_roots():
    rng = random.Random(99)
    lifted = 0
    while lifted < 40:
        deg = rng.choice((2, 3))
        coeffs = [rng.randrange(-50, 50) for _ in range(deg)] + [1]
        P = Poly.from_ints(F7, coeffs)
        res = P.residue()
        root = next((c for c in range(7)
                     if _eval_mod(res, c, 7) == 0
                     and _eval_mod(_deriv_mod(res, 7), c, 7) != 0), None)
        if root is None:
            continue
        r = hensel_lift_root(P, F7.from_int(root))
        assert P(r).is_zero_to_prec
        lifted += 1


def _eval_mod(coeffs, x, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def _deriv_mod(coeffs, p):
    return [(i * c) % p for i, c in enumerate(coeffs)][1:]


def test_roots_split_linear_factors():
    vals = [2, 3, 4]
    P = Poly(F5, [F5.one()])
    for v in vals:
        P = _mul_linear(P, F5.from_int(v))
    roots = roots_monic(P)
    assert roots is not None and len(roots) == 3
    got = sorted(r.unit[0] % 5 for r in roots)
    assert got == [2, 3, 4]


def _mul_linear(P, r):
    f = P.field
    shifted = [f.zero()] + list(P.coeffs)
    scaled = [(-r) * c for c in P.coeffs] + [f.zero()]
    return Poly(f, [a + b for a, b in zip(shifted, scaled)])


def test_roots_cluster_with_same_residue():
    a, b = F5.from_int(6), F5.from_int(26)  # both = 1 mod 5
    P = Poly(F5, [a * b, -(a + b), F5.one()])
    roots = roots_monic(P)
    assert sorted(r.unit[0] % 125 for r in roots) == [6, 26]


def test_roots_of_exponential_eigenvalues():
    ea, eb = padic_exp(F5.from_int(5)), padic_exp(F5.from_int(10))
    P = Poly(F5, [ea * eb, -(ea + eb), F5.one()])
    roots = roots_monic(P)
    assert roots is not None
    assert all(any((r - t).is_zero_to_prec for t in (ea, eb)) for r in roots)


def test_repeated_root_reports_reduced_precision():
    one = F5.one()
    P = Poly(F5, [one, one + one, one])  # (x+1)^2
    roots = roots_monic(P)
    assert roots is not None and len(roots) == 2
    for r in roots:
        assert (r + one).is_zero_to_prec
        assert r.prec < F5.prec  # multiplicity only known to reduced depth


def test_nonsplit_polynomial_returns_none():
    P = Poly.from_ints(F5, [2, 0, 1])  # x^2 + 2 irreducible mod 5
    assert roots_monic(P) is None


def test_ramified_square_root_of_p():
    F = FieldSpec(5, 2, 16)
    P = Poly(F, [F.from_int(-5), F.zero(), F.one()])
    roots = roots_monic(P)
    assert roots is not None
    for r in roots:
        assert r.valuation() * 2 == 1
        assert P(r).is_zero_to_prec
