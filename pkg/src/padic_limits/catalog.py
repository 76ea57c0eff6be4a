"""Fixture catalog: executable encodings of the example and
counterexample families, each with machine-checkable expectations.

The catalog is the regression corpus: ``check_fixture`` runs every
expectation under the configuration stored with it and reports pass or
fail per check.  Families whose original construction needs irrational
valuations are shipped as rational surrogates and annotated as such,
with correspondingly weakened expectations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .alignment import (
    align_irreducible,
    align_multiplicity_free,
    block_idempotents,
    irreducibility_certificate,
    rebalance,
    valuation_profile,
)
from .convergence import convergence_report, trace_table
from .envelope import eigenvalue_unit_relation, root_of_unity_order_bound
from .errors import ConfigError, NegativeVerdict, UnboundedLatticeError
from .families import LIMIT, RepFamily
from .field import INF
from .lattices import find_stable_lattice, transfer_lattice


@dataclass(frozen=True)
class FixtureEntry:
    file: str
    expectations: dict
    annotations: tuple[str, ...] = ()
    config: dict | None = None


_SURROGATE = ("inexact-surrogate: the source construction uses an "
              "irrational-valuation or irrational-limit datum outside the "
              "discrete value group; expectations are weakened accordingly")

CATALOG: dict[str, FixtureEntry] = {
    "sec2_3_diag": FixtureEntry(
        "sec2_3_diag.json",
        {"delta_pattern_n_plus_1": True, "uniform_on_ball": True,
         "members_differ_from_limit": True},
        annotations=(_SURROGATE,),
        config={"L": 4, "n": (0, 12)},
    ),
    "sec2_3_twist": FixtureEntry(
        "sec2_3_twist.json",
        {"unit_relation": {"word": (2,), "order": 2,
                           "exponent_cap": 1, "order_cap": 24},
         "order_divides_bound": {"f": 1}},
        annotations=(_SURROGATE,),
        config={"L": 2, "n": (0, 6)},
    ),
    "sec2_3_unipotent": FixtureEntry(
        "sec2_3_unipotent.json",
        {"uniform_on_ball": True},
        config={"L": 3, "n": (1, 10)},
    ),
    "sec1_3_counterexample": FixtureEntry(
        "sec1_3_counterexample.json",
        {"uniform_on_ball": True,
         "align_rejects_stage": "member-irreducibility"},
        config={"L": 4, "n": (0, 8), "dims": (1, 1)},
    ),
    "limit_multiplicity_violation": FixtureEntry(
        "limit_multiplicity_violation.json",
        {"members_irreducible": True,
         "align_rejects_stage": "block-idempotents"},
        config={"L": 4, "n": (1, 8), "dims": (1, 1)},
    ),
    "thm1_2_conj": FixtureEntry(
        "thm1_2_conj.json",
        {"irreducible_deltas_at_least_n_minus_2": True},
        config={"L": 3, "n": (0, 12)},
    ),
    "thm1_4_pipeline": FixtureEntry(
        "thm1_4_pipeline.json",
        {"pipeline_bounds": True},
        config={"L": 4, "n": (0, 12), "dims": (1, 1)},
    ),
    "nonconvergent": FixtureEntry(
        "nonconvergent.json",
        {"trace_convergent_on_ball": False},
        config={"L": 2, "n": (0, 11)},
    ),
    "already_diagonal": FixtureEntry(
        "already_diagonal.json",
        {"rebalance_identity": True},
        config={"L": 3, "n": (0, 6), "dims": (1, 1)},
    ),
    "lattice_basic": FixtureEntry(
        "lattice_basic.json",
        {"stable_lattice_smith": (-1, 0), "stability_certificate_zero": True},
        config={"L": 3},
    ),
    "lattice_transfer": FixtureEntry(
        "lattice_transfer.json",
        {"transfer_N0": 1},
        config={"L": 3, "n": (0, 8)},
    ),
    "sec1_4_surrogate": FixtureEntry(
        "sec1_4_surrogate.json",
        {"stable_lattice_smith": (-1, 0)},
        annotations=(_SURROGATE,),
        config={"L": 3},
    ),
}


def fixture_names() -> list[str]:
    return sorted(CATALOG)


def load_fixture(name: str):
    """(family, expectations) for a catalog entry."""
    if name not in CATALOG:
        raise ConfigError(f"unknown fixture {name!r}; "
                          f"known: {', '.join(fixture_names())}")
    entry = CATALOG[name]
    data = resources.files("padic_limits.fixtures").joinpath(entry.file)
    fam = RepFamily.from_json_dict(json.loads(data.read_text()))
    return fam, dict(entry.expectations)


def fixture_path(name: str) -> str:
    entry = CATALOG[name]
    return str(resources.files("padic_limits.fixtures").joinpath(entry.file))


def check_fixture(name: str) -> list[tuple[str, bool, str]]:
    """Run every expectation; returns (check, passed, detail) rows."""
    fam, expect = load_fixture(name)
    entry = CATALOG[name]
    cfg = entry.config or {}
    L = cfg.get("L", 3)
    n_lo, n_hi = cfg.get("n", (0, 8))
    ns = range(n_lo, n_hi + 1)
    dims = cfg.get("dims")
    out = []
    for key, val in expect.items():
        try:
            ok, detail = _run_check(fam, key, val, L, ns, dims)
        except Exception as ex:  # a crashed check is a failed check
            ok, detail = False, f"{type(ex).__name__}: {ex}"
        out.append((key, ok, detail))
    return out


def _run_check(fam, key, val, L, ns, dims):
    if key == "delta_pattern_n_plus_1":
        rep = convergence_report(trace_table(fam, L, ns))
        want = [Fraction(n + 1) for n in ns]
        got = list(rep.delta)
        return got == want, f"delta={[str(d) for d in got]}"
    if key == "uniform_on_ball":
        rep = convergence_report(trace_table(fam, L, ns))
        return rep.uniform_on_ball == val, \
            f"uniform_on_ball={rep.uniform_on_ball}"
    if key == "trace_convergent_on_ball":
        rep = convergence_report(trace_table(fam, L, ns))
        return rep.trace_convergent_on_ball == val, \
            f"trace_convergent_on_ball={rep.trace_convergent_on_ball}"
    if key == "members_differ_from_limit":
        rep = convergence_report(trace_table(fam, L, ns))
        finite = all(d is not INF for d in rep.delta)
        return finite, "every member trace differs from the limit"
    if key == "unit_relation":
        M = fam.eval(LIMIT, tuple(val["word"]))
        rels = eigenvalue_unit_relation(M, val["exponent_cap"],
                                        val["order_cap"])
        orders = sorted({r.order for r in rels})
        return val["order"] in orders, f"orders={orders}"
    if key == "order_divides_bound":
        M = fam.eval(LIMIT, (2,))
        rels = eigenvalue_unit_relation(M, 1, 24)
        bound = root_of_unity_order_bound(fam.field.p, val["f"],
                                          fam.field.e, fam.d).combined
        ok = all(bound % r.order == 0 for r in rels)
        return ok, f"bound={bound}"
    if key == "align_rejects_stage":
        try:
            align_multiplicity_free(fam, L, ns, dims=dims)
            return False, "pipeline unexpectedly succeeded"
        except NegativeVerdict as ex:
            return ex.stage == val, f"rejected at {ex.stage}"
    if key == "members_irreducible":
        for n in ns:
            irreducibility_certificate(fam, n, L)
        return True, f"certificates exist for n in {ns.start}..{ns.stop - 1}"
    if key == "irreducible_deltas_at_least_n_minus_2":
        al = align_irreducible(fam, L, ns)
        ok = all(d is INF or d >= n - 2
                 for n, d in zip(ns, al.deltas) if d != -INF)
        return ok, f"deltas={[str(d) for d in al.deltas]}"
    if key == "pipeline_bounds":
        al = align_multiplicity_free(fam, L, ns, dims=dims)
        live = [n for n in ns if n >= al.n0]
        c_ok = all(c >= n - 2 for n, c in zip(live, al.profile.coercivity))
        m_ok = all(m >= (c // 2) - 1 for c, m in
                   zip(al.profile.coercivity, al.plan.margins))
        o_ok = all(d >= m for d, m in zip(al.offdiag_deltas, al.plan.margins))
        return c_ok and m_ok and o_ok, \
            f"c={[str(c) for c in al.profile.coercivity]} " \
            f"m={[str(m) for m in al.plan.margins]}"
    if key == "rebalance_identity":
        blocks = block_idempotents(fam, L, tuple(ns), dims)
        prof = valuation_profile(fam, blocks, L, tuple(ns))
        plan = rebalance(prof, require_coercivity=False)
        ok = all(all(u == 0 for u in plan.u[n]) for n in ns)
        return ok, f"u={plan.u[ns.start]}"
    if key == "stable_lattice_smith":
        lb = find_stable_lattice(fam, LIMIT, L)
        return lb.smith_invariants == tuple(val), \
            f"smith={lb.smith_invariants}"
    if key == "stability_certificate_zero":
        lb = find_stable_lattice(fam, LIMIT, L)
        return lb.stability_certificate == 0, \
            f"certificate={lb.stability_certificate}"
    if key == "transfer_N0":
        tr = transfer_lattice(fam, L, ns)
        return tr.N0 == val, f"N0={tr.N0}"
    raise ConfigError(f"unknown expectation key {key!r}")
