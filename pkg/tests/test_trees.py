import itertools
from math import comb

import pytest
from hypothesis import given, strategies as st

from etw.kernel import finite_set_index
from etw.numberings import FiniteCeSet, ProgramCeSet
from etw.trees import (
    Tree, all_trees, delta_decode, delta_encode, explicit_tree, format_seq, inseparable_tree,
    kb_key, kb_leq, lex_leq, parse_seq, partial_paths_bruteforce, path_codes, path_of_vertex,
    prefix_leq, s_T_members, sigma_T_limit, sigma_T_stage,
)
from oracles import iterated_pair_seq, tree_paths

seqs = st.lists(st.integers(0, 4), max_size=5).map(tuple)


@pytest.mark.parametrize("x, code", [((), 0), ((0,), 1), ((1,), 3), ((2,), 6),
                                     ((0, 0), 2), ((0, 1), 9), ((3, 1), 90)])
def test_delta_values(x, code):
    assert delta_encode(x) == code
    assert delta_decode(code) == x


@given(st.lists(st.integers(0, 10**6), max_size=6).map(tuple))
def test_delta_against_iterated_pairing(x):
    assert delta_encode(x) == iterated_pair_seq(x)
    assert delta_decode(delta_encode(x)) == x


def test_delta_is_onto_an_initial_segment():
    assert sorted(delta_encode(delta_decode(n)) for n in range(3000)) == list(range(3000))


INF = float("inf")


def _kb_oracle_key(x):
    # extensions come first: compare with an end marker larger than any entry
    return tuple(x) + (INF,)


@given(seqs, seqs)
def test_kb_order_matches_end_marker_comparison(x, y):
    assert kb_leq(x, y) == (_kb_oracle_key(x) <= _kb_oracle_key(y))


@given(seqs, seqs)
def test_lex_order_is_tuple_order(x, y):
    assert lex_leq(x, y) == (x <= y)


@given(st.lists(seqs, max_size=8))
def test_kb_sort_is_total(xs):
    assert sorted(xs, key=kb_key) == sorted(xs, key=_kb_oracle_key)


def test_seq_text_round_trip():
    for x in [(), (0,), (3, 1, 4)]:
        assert parse_seq(format_seq(x)) == x
    assert parse_seq("(1, 2)") == (1, 2)
    with pytest.raises(ValueError):
        parse_seq("1 2")


def test_tree_counts_are_ternary_catalan_numbers():
    # rooted subtrees of the ternary tree with k vertices: C(3k, k) / (2k + 1)
    expected = sum(comb(3 * k, k) // (2 * k + 1) for k in range(1, 6))
    assert len(all_trees(5)) == expected == 344


def test_explicit_tree_rejects_non_trees():
    with pytest.raises(ValueError, match="no parent"):
        explicit_tree([(), (0, 1)])
    with pytest.raises(ValueError, match="root"):
        explicit_tree([(0,)])


@pytest.mark.parametrize("tree", all_trees(5)[::7], ids=lambda t: str(len(t.vertices)))
def test_partial_paths_three_ways(tree):
    brute = set(partial_paths_bruteforce(tree))
    oracle = set(tree_paths(set(tree.vertices)))
    by_vertex = {path_of_vertex(tree, x) for x in tree.vertices}
    assert brute == oracle == by_vertex
    assert sorted(s_T_members(tree), key=sorted) == sorted(
        (frozenset(delta_encode(y) for y in p) for p in brute), key=sorted)


def _sigma_oracle(tree, stages_of_w, s):
    """Stage s of the normalizer recomputed from scratch: stage t+1 reads W^t."""
    tip = None
    for t in range(s):
        seen = stages_of_w(t)
        cands = []
        for c in seen:
            x = delta_decode(c)
            if x in tree.vertices and all(delta_encode(x[:i]) in seen for i in range(len(x))) \
                    and (tip is None or prefix_leq(tip, x)):
                cands.append(x)
        if cands:
            tip = min(cands, key=_kb_oracle_key)
    return frozenset() if tip is None else path_codes(tip)


_fixture = explicit_tree([(), (0,), (1,), (0, 1), (0, 1, 2)])
_codes = sorted(delta_encode(x) for x in _fixture.vertices) + [delta_encode((2,)), delta_encode((0, 0))]


@given(st.frozensets(st.sampled_from(_codes), max_size=5), st.integers(0, 400))
def test_sigma_stages_match_recomputation(items, s):
    w = FiniteCeSet(items)
    assert sigma_T_stage(_fixture, w, s) == _sigma_oracle(_fixture, w.stage, s)


@given(st.frozensets(st.sampled_from(_codes), max_size=5))
def test_sigma_limit_is_empty_or_a_partial_path(items):
    out, reached = sigma_T_limit(_fixture, FiniteCeSet(items), float("inf"))
    assert reached is not None
    members = s_T_members(_fixture)
    assert out == frozenset() or (out in members and out <= items)


def test_sigma_fixes_every_member():
    for tree in all_trees(4):
        for x in tree.vertices:
            out, _ = sigma_T_limit(tree, FiniteCeSet(path_codes(x)), float("inf"))
            assert out == path_codes(x)


def test_closed_form_and_program_presentations_agree():
    items = path_codes((0, 1))
    e = finite_set_index(items)
    for s in (0, 5, 40, 200):
        assert sigma_T_stage(_fixture, ProgramCeSet(e), s) == sigma_T_stage(_fixture, FiniteCeSet(items), s)


def test_sigma_stage_is_monotone_on_members():
    w = FiniteCeSet(path_codes((0, 1, 2)))
    prev = frozenset()
    for s in range(0, 300, 3):
        cur = sigma_T_stage(_fixture, w, s)
        assert prev <= cur
        prev = cur


def test_inseparable_program_matches_predicate():
    by_predicate = inseparable_tree()
    by_program = Tree(program=by_predicate.program, alphabet=(0, 1))
    for n in range(6):
        for x in itertools.product(range(3), repeat=n):
            assert (x in by_program) == by_predicate.predicate(x), x


def test_inseparable_truncation_has_every_level():
    # at most one constraint applies per position, so every vertex has a child
    t = inseparable_tree().truncate(6)
    assert t.check() == []
    assert all(set(x) <= {0, 1} for x in t.vertices)
    assert {len(x) for x in t.vertices} == set(range(7))
