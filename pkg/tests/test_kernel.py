import random

import pytest
from hypothesis import given, strategies as st

from etw.kernel import (
    ADD, EXHAUSTED, IDENTITY, LOOP, MAX_INDEX_BITS, PROJ1, PROJ2, Asm, Halted, Program,
    const_index, decode_list, decode_program, decode_seq, dn_decode, dn_encode, encode_list,
    encode_program, encode_seq, finite_set_index, finite_set_steps, fixpoint, format_program,
    image_stage, match_finite_set, pair, parse_program, run, run_clocked, smn, unpair, we_stage,
)
from oracles import (
    RefOutOfFuel, bijective_digits_slow, cantor_pair, cantor_table, program_text, reference_run,
)

# ---------------------------------------------------------------------------
# codings


def test_pairing_matches_diagonal_enumeration():
    table = cantor_table(2000)
    for n, (x, y) in table.items():
        assert pair(x, y) == n
        assert unpair(n) == (x, y)


@given(st.integers(0, 10**40), st.integers(0, 10**40))
def test_pairing_round_trip(x, y):
    assert pair(x, y) == cantor_pair(x, y)
    assert unpair(pair(x, y)) == (x, y)


def test_pair_small_values():
    assert [pair(0, 0), pair(1, 0), pair(0, 1), pair(2, 0)] == [0, 1, 2, 3]


@given(st.frozensets(st.integers(0, 200)))
def test_dn_round_trip(s):
    assert dn_decode(dn_encode(s)) == s


def test_dn_examples():
    assert dn_decode(0) == frozenset()
    assert dn_decode(5) == {0, 2}
    assert dn_encode({1, 3}) == 10


@given(st.lists(st.integers(0, 10**6), max_size=8))
def test_seq_round_trip(xs):
    assert decode_seq(encode_seq(xs)) == tuple(xs)


def test_list_coding_is_a_bijection_on_an_initial_segment():
    seen = set()
    for n in range(20000):
        xs = decode_list(n)
        assert encode_list(xs) == n
        seen.add(xs)
    assert len(seen) == 20000
    assert decode_list(0) == ()


@given(st.lists(st.integers(0, 10**12), max_size=12))
def test_list_coding_round_trip(xs):
    assert decode_list(encode_list(xs)) == tuple(xs)


def test_list_coding_against_slow_digits():
    # words over {1,2} separated by 3, least significant digit first, read in
    # bijective base 3 and shifted by one
    rng = random.Random(7)
    for _ in range(200):
        xs = [rng.randrange(0, 10**rng.randint(1, 30)) for _ in range(rng.randint(1, 6))]
        word = []
        for i, x in enumerate(xs):
            if i:
                word.append(3)
            word.extend(reversed(bijective_digits_slow(x, 2)))
        value = sum(d * 3**i for i, d in enumerate(word))
        assert encode_list(xs) == value + 1


def test_list_coding_is_size_additive():
    # thirty instructions must stay far below the decode cap
    prog = Program(tuple(parse_program("S 1\n" * 30).instructions))
    assert encode_program(prog).bit_length() < 200


def test_wide_indices_refuse_to_decode():
    with pytest.raises(OverflowError):
        decode_program(1 << (MAX_INDEX_BITS + 1))
    assert run(1 << (MAX_INDEX_BITS + 1), 0, 100) is EXHAUSTED


# ---------------------------------------------------------------------------
# program text


def test_empty_program_is_index_zero_and_identity():
    assert decode_program(0) == Program(())
    assert IDENTITY == 0
    assert run(0, 7, 10) == Halted(7, 0)


def test_parse_errors_name_the_line():
    with pytest.raises(ValueError, match="line 2"):
        parse_program("S 1\nQ 3\n")
    with pytest.raises(ValueError, match="registers"):
        parse_program("S 0")
    with pytest.raises(ValueError, match="unknown native"):
        parse_program("N 1 2 frobnicate")


_instr = st.one_of(
    st.tuples(st.just("Z"), st.integers(1, 5)),
    st.tuples(st.just("S"), st.integers(1, 5)),
    st.tuples(st.just("T"), st.integers(1, 5), st.integers(1, 5)),
    st.tuples(st.just("J"), st.integers(1, 5), st.integers(1, 5), st.integers(1, 9)),
    st.tuples(st.just("C"), st.integers(1, 5), st.integers(0, 20)),
    st.tuples(st.just("N"), st.integers(1, 5), st.integers(1, 5),
              st.sampled_from(["pair", "fst", "snd", "add", "monus", "bit"])),
)


@given(st.lists(_instr, max_size=8))
def test_text_and_index_round_trip(prog):
    p = parse_program(program_text(prog))
    assert parse_program(format_program(p)) == p
    assert decode_program(encode_program(p)) == p


@given(st.lists(_instr, min_size=1, max_size=8), st.integers(0, 6))
def test_interpreter_matches_reference_machine(prog, x):
    e = encode_program(parse_program(program_text(prog)))
    fuel = 60
    try:
        v, steps = reference_run(prog, x, fuel)
    except RefOutOfFuel:
        assert run_clocked(e, x, fuel) is EXHAUSTED
        return
    if max(v, x) >= 1 << 60:
        return  # the kernel charges wide values; outside the oracle's range
    r = run_clocked(e, x, fuel)
    assert r == Halted(v, steps)


def test_step_bound_includes_argument_bound():
    assert run(IDENTITY, 5, 4) is EXHAUSTED
    assert run(IDENTITY, 5, 5) == Halted(5, 0)
    assert run_clocked(IDENTITY, 5, 0) == Halted(5, 0)


@given(st.lists(_instr, min_size=1, max_size=6), st.integers(0, 5), st.integers(0, 40), st.integers(0, 40))
def test_budget_monotonicity(prog, x, s, extra):
    e = encode_program(parse_program(program_text(prog)))
    r = run(e, x, s)
    if isinstance(r, Halted):
        assert run(e, x, s + extra) == r


# ---------------------------------------------------------------------------
# library programs


def test_library_programs():
    assert run_clocked(ADD, pair(3, 4), 10**4).value == 7
    assert run_clocked(PROJ1, pair(3, 4), 100).value == 3
    assert run_clocked(PROJ2, pair(3, 4), 100).value == 4
    assert run_clocked(const_index(9), 123, 100).value == 9
    assert run_clocked(LOOP, 0, 10**6) is EXHAUSTED


def test_asm_labels_and_end():
    a = Asm()
    a.zero(2)
    a.label("top")
    a.jeq(1, 2, "end")
    a.succ(2)
    a.succ(2)
    a.jump("top")
    evens = a.index()
    prog = _as_tuples(decode_program(evens))
    expect = set()
    for x in range(31):
        try:
            reference_run(prog, x, 30)
            expect.add(x)
        except RefOutOfFuel:
            pass
    assert we_stage(evens, 30) == expect
    assert expect and all(x % 2 == 0 for x in expect)
    assert run_clocked(evens, 40, 10**4).value == 40


def _as_tuples(p):
    return [tuple(int(t) if t.isdigit() else t for t in line.split())
            for line in format_program(p).splitlines()]


@pytest.mark.parametrize("items", [[], [0], [3], [0, 2, 5], [7, 1, 4, 9]])
def test_finite_set_programs(items):
    e = finite_set_index(items)
    assert match_finite_set(decode_program(e)) == tuple(sorted(set(items)))
    # closed-form steps against the reference machine on the same program text
    prog = _as_tuples(decode_program(e))
    for x in range(12):
        try:
            _, steps = reference_run(prog, x, 500)
        except RefOutOfFuel:
            steps = None
        assert finite_set_steps(frozenset(items), x) == steps
        r = run_clocked(e, x, 500)
        assert (r.steps if isinstance(r, Halted) else None) == steps
    assert we_stage(e, 100) == frozenset(items)


def test_image_stage():
    a = Asm()
    a.succ(1)
    assert image_stage(a.index(), 5) == {1, 2, 3, 4, 5, 6}


# ---------------------------------------------------------------------------
# s-m-n and the recursion theorem


@given(st.sampled_from([ADD, PROJ1, PROJ2, IDENTITY, const_index(4)]), st.integers(0, 50), st.integers(0, 50))
def test_smn_equation_on_library(e, y, x):
    left = run_clocked(smn(e, y), x, 10**5)
    right = run_clocked(e, pair(y, x), 10**5)
    assert isinstance(left, Halted) and isinstance(right, Halted)
    assert left.value == right.value
    assert left.steps == right.steps + 4


def test_quine_by_fixpoint():
    # phi_e(x) = e for every x, from the transformer z |-> smn(PROJ1, z)
    a = Asm()
    a.copy(1, 2)
    a.const(1, PROJ1)
    a.native(1, 2, "smn")
    e = fixpoint(a.index())
    for x in range(5):
        assert run_clocked(e, x, 10**5).value == e


def test_constant_transformer_fixpoint():
    e = fixpoint(const_index(ADD))
    assert run_clocked(e, pair(2, 5), 10**5).value == 7


def test_self_reference_without_base_case_runs_out_of_fuel():
    # phi_e = phi_e: unwinds eval forever; must end as exhaustion, not a crash
    e = fixpoint(IDENTITY)
    assert run_clocked(e, 0, 10**5) is EXHAUSTED
