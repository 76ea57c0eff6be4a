"""Family grammar, word-ball, evaluation, and Haar sampling tests."""

import itertools

import pytest

from padic_limits import ConfigError, FieldSpec, padic_exp
from padic_limits.families import (
    LIMIT,
    RepFamily,
    haar_parameters,
    haar_sample,
    parse_expr,
)
from padic_limits.words import (
    invert_word,
    mul_words,
    reduce_word,
    word_ball,
)

DIAG_DOC = {
    "name": "sec2_3_diag",
    "field": {"p": 5, "e": 1, "prec": 16},
    "d": 2,
    "generators": [[["E(z)", "0"], ["0", "E(seq(a)*z)"]]],
    "limit": [[["E(z)", "0"], ["0", "E(2*z)"]]],
    "sequences": {"a": {"formula": "2+pow(5,n)", "limit": "2"}},
    "parametric": True,
}


def diag_family():
    return RepFamily.from_json_dict(dict(DIAG_DOC))


def test_word_ball_counts():
    b = word_ball(1, 3)
    assert list(b) == [(), (1,), (-1,), (1, 1), (-1, -1),
                       (1, 1, 1), (-1, -1, -1)]
    assert len(word_ball(2, 1)) == 5
    assert len(word_ball(2, 2)) == 17  # 1 + 4 + 12


def test_word_ball_closed_under_inversion():
    b = word_ball(2, 3)
    ws = set(b.words)
    assert all(invert_word(w) in ws for w in b)


def test_word_ball_cap():
    with pytest.raises(ConfigError):
        word_ball(3, 8, cap=1000)


def test_word_reduction():
    assert reduce_word((1, 2, -2, -1)) == ()
    assert mul_words((1, 2), (-2, 1)) == (1, 1)


def test_eval_empty_word_is_identity():
    fam = diag_family()
    M = fam.eval(3, ())
    assert (M.trace() - fam.field.from_int(2)).is_zero_to_prec


def test_eval_matches_exponential_oracle():
    fam = diag_family()
    F = fam.field
    g = fam.eval(1, (1,))  # a_1 = 7
    assert (g.rows[0][0] - padic_exp(F.from_int(5))).is_zero_to_prec
    assert (g.rows[1][1] - padic_exp(F.from_int(35))).is_zero_to_prec


def test_eval_homomorphism_on_ball():
    fam = diag_family()
    b = fam.ball(2)
    for w1, w2 in itertools.product(b.words, repeat=2):
        lhs = fam.eval(2, w1) @ fam.eval(2, w2)
        rhs = fam.eval(2, mul_words(w1, w2))
        diff = lhs - rhs
        assert all(x.vmin_pi >= fam.field.prec - 2
                   for r in diff.rows for x in r)


def test_word_times_inverse_is_identity():
    import random

    fam = diag_family()
    rng = random.Random(1)
    for _ in range(50):
        w = reduce_word(tuple(rng.choice((1, -1)) for _ in range(4)))
        M = fam.eval(0, w) @ fam.eval(0, invert_word(w))
        diff = M - __import__("padic_limits").matrices.PadicMatrix.identity(
            fam.field, 2)
        assert all(x.vmin_pi >= fam.field.prec - 2
                   for r in diff.rows for x in r)


def test_limit_entries_must_be_n_free():
    bad = dict(DIAG_DOC)
    bad["limit"] = [[["E(z)", "0"], ["0", "pow(5,n)"]]]
    with pytest.raises(ConfigError):
        RepFamily.from_json_dict(bad)


def test_unknown_keys_rejected():
    bad = dict(DIAG_DOC)
    bad["extra"] = 1
    with pytest.raises(ConfigError):
        RepFamily.from_json_dict(bad)
    bad2 = dict(DIAG_DOC)
    bad2["sequences"] = {"a": {"formula": "2", "bogus": 1}}
    with pytest.raises(ConfigError):
        RepFamily.from_json_dict(bad2)


def test_grammar_rejects_unknown_tokens():
    with pytest.raises(ConfigError):
        parse_expr("2 ** 3")
    with pytest.raises(ConfigError):
        parse_expr("E(z")


def test_missing_limit_with_n_dependence_rejected():
    bad = {k: v for k, v in DIAG_DOC.items() if k != "limit"}
    with pytest.raises(ConfigError):
        RepFamily.from_json_dict(bad)


def test_sequence_table_then_formula():
    doc = dict(DIAG_DOC)
    doc["sequences"] = {"a": {"table": [9, 9], "formula": "2+pow(5,n)",
                              "limit": "2"}}
    fam = RepFamily.from_json_dict(doc)
    g0 = fam.eval(0, (1,))
    assert (g0.rows[1][1] - padic_exp(fam.field.from_int(45))).is_zero_to_prec
    g2 = fam.eval(2, (1,))
    assert (g2.rows[1][1]
            - padic_exp(fam.field.from_int(5 * 27))).is_zero_to_prec


def test_haar_reproducible_and_splittable():
    fam = diag_family()
    a = haar_parameters(fam, "s", 20, 4)
    b = haar_parameters(fam, "s", 20, 4)
    assert a == b
    assert haar_parameters(fam, "s", 10, 4) == a[:10]


def test_haar_empty_stream():
    fam = diag_family()
    assert list(haar_sample(fam, 0, 0, 2)) == []


def test_haar_residues_chi_square():
    fam = diag_family()
    zs = haar_parameters(fam, 42, 10_000, 1)
    counts = [0] * 5
    for z in zs:
        counts[z % 5] += 1
    chi2 = sum((c - 2000) ** 2 / 2000 for c in counts)
    assert chi2 < 18.47  # 99.9% quantile of chi-square with 4 dof


def test_haar_walk_mode_needs_explicit_length():
    doc = {
        "field": {"p": 5, "e": 1, "prec": 16},
        "d": 2,
        "generators": [
            [["1", "1"], ["0", "1"]],
            [["1", "0"], ["5", "1"]],
        ],
    }
    fam = RepFamily.from_json_dict(doc)
    with pytest.raises(ConfigError):
        list(haar_sample(fam, 0, 1, 2))
    with pytest.raises(ConfigError):
        list(haar_sample(fam, 0, 1, 2, walk_len=3))
    mats = list(haar_sample(fam, 0, 3, 2, walk_len=8))
    assert len(mats) == 3


def test_param_matrix_is_group_like():
    fam = diag_family()
    A = fam.param_matrix(LIMIT, 3)
    B = fam.param_matrix(LIMIT, 4)
    C = fam.param_matrix(LIMIT, 7)
    D = A @ B - C
    assert all(x.vmin_pi >= fam.field.prec - 2 for r in D.rows for x in r)
