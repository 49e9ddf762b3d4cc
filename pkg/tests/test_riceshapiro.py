import itertools

import pytest
from hypothesis import given, strategies as st

from etw.kernel import Halted, dn_decode, dn_encode, pair, run_clocked, unpair
from etw.numberings import classical_rice_shapiro_oracle
from etw.riceshapiro import (
    BranchingInstance, branching, branching_fixtures, monotone_check, non_open_witness,
    product_members, projection_h, projection_h_program, rs_consistency, rs_forward,
    upward_closure_check, verify_branching, verify_non_open_trace, xt_index_pool,
)
from etw.spaces import build_X_T, explicit_space
from etw.trees import all_trees, explicit_tree
from etw.verdict import Status

_power3 = [frozenset(c) for r in range(4) for c in itertools.combinations(range(3), r)]


@given(st.sets(st.sampled_from(_power3)))
def test_monotone_agrees_with_classical_oracle(k):
    a = monotone_check(k, _power3)
    b = classical_rice_shapiro_oracle(k, _power3)
    assert a.status == b.status
    if a.refuted:
        assert a.witness["A"] in k and a.witness["B"] not in k and a.witness["A"] <= a.witness["B"]


def test_monotone_examples_on_subsets_of_zero_one():
    fam = [set(), {0}, {1}, {0, 1}]
    assert monotone_check([{0}, {0, 1}], fam).verified
    assert monotone_check([set()], fam).refuted
    assert monotone_check([], fam).verified


def test_sierpinski_forward_direction():
    s = explicit_space(["top", "bot"], [["top"]])
    from etw.spaces import ModularWitness
    w = ModularWitness(("top", "bot"), (frozenset([1]), frozenset([0, 1])))
    assert upward_closure_check(s, ["top"]).verified
    assert rs_forward(s, w, ["top"]).verified
    v = rs_forward(s, w, ["bot"])
    assert v.refuted and v.witness["open"] is False


@pytest.mark.parametrize("tree", all_trees(3), ids=lambda t: str(sorted(t.vertices)))
def test_rs_consistency_on_every_K(tree):
    space, w = build_X_T(tree)
    pool = xt_index_pool(space)
    pts = list(space.points)
    for r in range(len(pts) + 1):
        for k in itertools.combinations(pts, r):
            v = rs_consistency(space, w, k, pool)
            assert v.verified, v.witness


def test_non_open_trace_points_leave_K():
    tree = explicit_tree([(), (0,), (1,), (0, 0)])
    space, w = build_X_T(tree)
    k = [()]
    trace = non_open_witness(space, w, k, ())
    stages = [r for r in trace.records if r["kind"] == "stage"]
    assert stages and all(r["point"] not in k for r in stages)
    assert verify_non_open_trace(space, w, k, (), trace).verified


def test_non_open_trace_refuses_open_K():
    tree = explicit_tree([(), (0,)])
    space, w = build_X_T(tree)
    trace = non_open_witness(space, w, [(0,)], (0,))
    assert trace.records[0]["holds"] is False


def test_tampered_trace_is_caught():
    tree = explicit_tree([(), (0,), (1,)])
    space, w = build_X_T(tree)
    trace = non_open_witness(space, w, [()], ())
    for r in trace.records:
        if r["kind"] == "stage":
            r["point"] = ()
            r["gamma_h"] = ()
    assert verify_non_open_trace(space, w, [()], (), trace).refuted


def test_product_of_subsets_of_zero():
    # pair(0, 0) = 0, so the product family coincides with the base family
    assert product_members([[], [0]]) == [frozenset(), frozenset({0})]
    assert len(product_members([[0], [1]])) == 4


def test_projection_example():
    d = dn_encode({pair(0, 1)})
    assert dn_decode(projection_h(d)) == {0, 1}
    r = run_clocked(projection_h_program(), d, 10**5)
    assert isinstance(r, Halted) and r.value == projection_h(d)


@given(st.frozensets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=4))
def test_projection_program_matches_definition(pairs):
    d = dn_encode(pair(x, y) for x, y in pairs)
    expect = {c for x, y in pairs for c in (x, y)}
    assert dn_decode(projection_h(d)) == expect
    r = run_clocked(projection_h_program(), d, 10**6)
    assert isinstance(r, Halted) and r.value == dn_encode(expect)
    # and back through unpairing
    assert {c for e in dn_decode(d) for c in unpair(e)} == expect


def test_branching_empty_fixture():
    inst = next(f for f in branching_fixtures() if f.name == "branching-empty")
    v = branching(inst, 10**4)
    assert v.verified
    eq = verify_branching(inst, v.witness["e"], v.witness["p"], bound=5, budget=10**4)
    assert eq.verified and eq.witness["W_e"] == []


def test_branching_unknown_when_budget_is_short():
    inst = branching_fixtures()[0]
    assert branching(inst, 10).status is Status.UNKNOWN


def test_branching_instance_is_hashable_record():
    inst = BranchingInstance(1, 2, 3, "x")
    assert {inst: 1}[BranchingInstance(1, 2, 3, "x")] == 1
