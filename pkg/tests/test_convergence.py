"""Trace tables, delta sequences, and ball-level verdicts."""

import math
from fractions import Fraction

from padic_limits.convergence import (
    convergence_report,
    pseudochar_dimension_check,
    trace_table,
)
from padic_limits.families import LIMIT, RepFamily
from padic_limits.reporting import TailPolicy

INF = math.inf

DIAG_DOC = {
    "field": {"p": 5, "e": 1, "prec": 16},
    "d": 2,
    "generators": [[["E(z)", "0"], ["0", "E(seq(a)*z)"]]],
    "limit": [[["E(z)", "0"], ["0", "E(2*z)"]]],
    "sequences": {"a": {"formula": "2+pow(5,n)", "limit": "2"}},
    "parametric": True,
}


def test_diag_family_delta_is_n_plus_one():
    fam = RepFamily.from_json_dict(dict(DIAG_DOC))
    rep = convergence_report(trace_table(fam, 4, range(0, 13)))
    assert list(rep.delta) == [Fraction(n + 1) for n in range(13)]
    assert rep.uniform_on_ball and rep.trace_convergent_on_ball
    assert rep.monotone_tail == 0
    assert rep.dimension_ok


def test_series_oracle_for_single_letter_delta():
    # independent oracle: v(e(a_n) - e(a)) = 1 + v(a_n - a) via exact
    # rational series summed far past the working precision
    p, N = 5, 16
    for n in (0, 3, 7):
        a_n, a = 2 + p**n, 2
        total = Fraction(0)
        for i in range(0, 40):
            total += (Fraction(p**i, math.factorial(i))
                      * (Fraction(a_n) ** i - Fraction(a) ** i))
        num, den = total.numerator, total.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        assert v - _vp(den, p) == n + 1


def _vp(x, p):
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def test_constant_family_delta_infinite():
    doc = {
        "field": {"p": 5, "e": 1, "prec": 16},
        "d": 2,
        "generators": [[["2", "1"], ["0", "3"]]],
    }
    fam = RepFamily.from_json_dict(doc)
    rep = convergence_report(trace_table(fam, 3, range(0, 6)))
    assert all(d is INF for d in rep.delta)
    assert rep.uniform_on_ball


def test_oscillating_family_not_convergent():
    doc = {
        "field": {"p": 5, "e": 1, "prec": 16},
        "d": 2,
        "generators": [[["1", "0"], ["0", "1+seq(osc)"]]],
        "limit": [[["1", "0"], ["0", "1"]]],
        "sequences": {"osc": {"table": [0, 1] * 8, "limit": "0"}},
    }
    fam = RepFamily.from_json_dict(doc)
    rep = convergence_report(trace_table(fam, 2, range(0, 12)))
    assert not rep.trace_convergent_on_ball
    assert not rep.uniform_on_ball


def test_direct_sum_delta_is_min_of_summands():
    mk = lambda expr: RepFamily.from_json_dict({
        "field": {"p": 5, "e": 1, "prec": 16}, "d": 1,
        "generators": [[[expr]]], "limit": [[["1"]]]})
    fam_a = mk("1+pow(5,n)")
    fam_b = mk("1+pow(5,n+2)")
    fam_sum = RepFamily.from_json_dict({
        "field": {"p": 5, "e": 1, "prec": 16}, "d": 2,
        "generators": [[["1+pow(5,n)", "0"], ["0", "1+pow(5,n+2)"]]],
        "limit": [[["1", "0"], ["0", "1"]]]})
    ns = range(1, 9)
    da = convergence_report(trace_table(fam_a, 3, ns)).delta
    db = convergence_report(trace_table(fam_b, 3, ns)).delta
    ds = convergence_report(trace_table(fam_sum, 3, ns)).delta
    assert list(ds) == [min(x, y) for x, y in zip(da, db)]


def test_delta_invariant_under_fixed_conjugation():
    # conjugating the diagonal family by [[1,1],[0,1]] leaves traces as-is
    conj = {
        "field": {"p": 5, "e": 1, "prec": 16},
        "d": 2,
        "generators": [[["E(z)", "E(z)-E(seq(a)*z)"], ["0", "E(seq(a)*z)"]]],
        "limit": [[["E(z)", "E(z)-E(2*z)"], ["0", "E(2*z)"]]],
        "sequences": {"a": {"formula": "2+pow(5,n)", "limit": "2"}},
        "parametric": True,
    }
    base = RepFamily.from_json_dict(dict(DIAG_DOC))
    twisted = RepFamily.from_json_dict(conj)
    ns = range(0, 9)
    d1 = convergence_report(trace_table(base, 3, ns)).delta
    d2 = convergence_report(trace_table(twisted, 3, ns)).delta
    assert list(d1) == list(d2)


def test_enlarging_ball_never_increases_delta():
    fam = RepFamily.from_json_dict(dict(DIAG_DOC))
    ns = range(0, 8)
    small = convergence_report(trace_table(fam, 2, ns)).delta
    large = convergence_report(trace_table(fam, 4, ns)).delta
    assert all(l <= s for s, l in zip(small, large))


def test_dimension_check_detects_corruption():
    fam = RepFamily.from_json_dict(dict(DIAG_DOC))
    table = trace_table(fam, 2, range(0, 3))
    assert pseudochar_dimension_check(table, 2)
    bad = dict(table.values)
    row = dict(bad[()])
    row[LIMIT] = fam.field.from_int(1)  # d - 1
    bad[()] = row
    corrupted = type(table)(fam, table.ball, table.n_range, bad)
    assert not pseudochar_dimension_check(corrupted, 2)


def test_threshold_policy_is_recorded():
    fam = RepFamily.from_json_dict(dict(DIAG_DOC))
    pol = TailPolicy(threshold=Fraction(100))
    rep = convergence_report(trace_table(fam, 2, range(0, 5)), pol)
    assert not rep.uniform_on_ball  # last delta 5 < 100
    doc = rep.to_json_dict()
    assert doc["thresholds"]["delta_threshold"] == "100"
