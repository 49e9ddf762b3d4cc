import itertools

import pytest
from hypothesis import given, strategies as st

from etw.kernel import dn_decode, finite_set_index
from etw.numberings import FiniteCeSet, TruncatedCeSet, WnFamily, intersection_sigma, principal_numbering
from etw.spaces import (
    XTNumbering, build_X_S, build_X_T, ee_space_check, eff_open_denotation, explicit_space,
    gamma_star_of, homeomorphism_check, intersection_identity_check, modular_check,
    principal_open_numbering, saturate, specialization_leq,
)
from etw.trees import all_trees, delta_encode, explicit_tree, path_codes, prefix_leq
from etw.verdict import Status


def test_saturate_follows_change_points():
    f = FiniteCeSet({0, 6})
    out, stage = saturate(f, 10**6)
    assert out == {0, 6} and stage == f.settles
    assert saturate(TruncatedCeSet(f, 2), 10**6)[0] == f.stage(2)
    assert saturate([3, 1], 0) == (frozenset({1, 3}), 0)


def test_sierpinski_is_effectively_enumerable():
    s = explicit_space(["top", "bot"], [["top"]], "sierpinski")
    assert ee_space_check(s).status is Status.VERIFIED
    assert specialization_leq(s, "bot", "top")
    assert not specialization_leq(s, "top", "bot")


def test_indiscrete_pair_is_not_t0():
    s = explicit_space(["a", "b"], [["a", "b"]])
    v = ee_space_check(s)
    assert v.status is Status.REFUTED


def test_open_numbering_denotes_unions():
    s = explicit_space([0, 1, 2], [[0], [1], [0, 1, 2]])
    num = principal_open_numbering(s)
    assert num.denote(finite_set_index({1, 2})) == {0, 1}
    assert num.denote(finite_set_index(())) == frozenset()
    assert eff_open_denotation(s, [3]) == {0, 1, 2}


_small_trees = all_trees(4)


@pytest.mark.parametrize("tree", _small_trees[::3], ids=lambda t: str(sorted(t.vertices)))
def test_X_T_checks(tree):
    space, w = build_X_T(tree)
    assert ee_space_check(space).status is Status.VERIFIED
    assert modular_check(space, w).status is Status.VERIFIED
    codes = sorted(delta_encode(x) for x in tree.vertices)
    for r in range(3):
        for v in itertools.combinations(codes, r):
            assert intersection_identity_check(space, w, v).status is Status.VERIFIED


@pytest.mark.parametrize("tree", _small_trees[::5])
def test_X_T_basis_is_cones_and_order_is_prefix(tree):
    space, _ = build_X_T(tree)
    for x in tree.vertices:
        assert space.alpha(delta_encode(x)) == {y for y in tree.vertices if prefix_leq(x, y)}
    for x in tree.vertices:
        for y in tree.vertices:
            assert specialization_leq(space, x, y) == prefix_leq(x, y)


def test_X_T_numbering_points():
    tree = explicit_tree([(), (0,), (1,), (0, 1)])
    num = XTNumbering(tree)
    assert num.point(FiniteCeSet(path_codes((0, 1)))) == (0, 1)
    assert num.point(FiniteCeSet(())) is None
    # a code outside the tree is ignored
    assert num.point(FiniteCeSet(path_codes((1,)) | {delta_encode((5,))})) == (1,)


def test_modular_check_refutes_a_bad_witness():
    tree = explicit_tree([(), (0,), (1,)])
    space, w = build_X_T(tree)
    bad = type(w)(tuple(reversed(w.b)), w.o)
    assert modular_check(space, bad).status is Status.REFUTED


@given(st.frozensets(st.integers(0, 6), max_size=4))
def test_gamma_star_is_index_set_of_subsets(member):
    top = 1 << 7
    expect = {n for n in range(top) if dn_decode(n) <= member}
    assert gamma_star_of(member) == expect


def _p01_numbering():
    fam = WnFamily(intersection_sigma([0, 1]), members=[frozenset(), {0}, {1}, {0, 1}], name="p01")
    return principal_numbering(fam)


@pytest.fixture(scope="module")
def xs01():
    return build_X_S(_p01_numbering(), bound=4, budget=10**5)


def test_X_S_is_homeomorphic_to_the_family(xs01):
    assert len(xs01.space.points) == 4
    assert homeomorphism_check(xs01).status is Status.VERIFIED
    assert ee_space_check(xs01.space).status is Status.VERIFIED


def test_X_S_homeomorphism_refutes_a_wrong_basis(xs01):
    assert homeomorphism_check(xs01, beta=lambda n: frozenset()).status is Status.REFUTED


def test_X_S_gamma_star_matches_members(xs01):
    for p in xs01.space.points:
        assert xs01.gamma_star(p) == gamma_star_of(xs01.f(p))
