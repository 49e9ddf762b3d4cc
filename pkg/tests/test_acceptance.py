"""Acceptance run: one test (and one printed line) per criterion.

Each criterion is a plain function returning a short summary; the pytest
wrappers also pin the runtime limit.  ``python tests/test_acceptance.py``
prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import sys
import time

sys.path.insert(0, os.path.dirname(__file__))
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

from etw.cli import main as cli_main
from etw.domains import alpha_c_check, domain_fixtures, domain_to_modular
from etw.kernel import (
    ADD, EXHAUSTED, IDENTITY, PROJ1, PROJ2, Asm, Halted, const_index, dn_decode, dn_encode,
    encode_program, finite_set_index, fixpoint, pair, parse_program, run_clocked, smn,
)
from etw.numberings import (
    FiniteCeSet, WnFamily, classical_rice_shapiro_oracle, discrete_sigma, effective_discreteness_check,
    intersection_sigma, positive_witness, principal_numbering, wn_check,
)
from etw.riceshapiro import (
    branching, branching_fixtures, diagonal_class_demo, monotone_check, product_family,
    projection_h, projection_h_program, rs_consistency, verify_branching, xt_index_pool,
)
from etw.spaces import build_X_T, ee_space_check, intersection_identity_check, modular_check
from etw.trees import all_trees, delta_encode, inseparable_tree, path_codes, sigma_T_limit
from oracles import program_text, tree_paths

INF = float("inf")


# ---------------------------------------------------------------------------
# kernel algebra

SMN_OVERHEAD = 4  # steps the specialized program spends loading y


def _random_program(rng: random.Random) -> int:
    prog = []
    for _ in range(rng.randint(1, 7)):
        op = rng.choice("ZSTJCN")
        r = lambda: rng.randint(1, 4)  # noqa: E731
        if op in "ZS":
            prog.append((op, r()))
        elif op == "T":
            prog.append((op, r(), r()))
        elif op == "J":
            prog.append((op, r(), r(), rng.randint(1, 8)))
        elif op == "C":
            prog.append((op, r(), rng.randint(0, 30)))
        else:
            prog.append((op, r(), r(), rng.choice(["pair", "fst", "snd", "add", "monus", "bit"])))
    return encode_program(parse_program(program_text(prog)))


def _agree(a, b, rerun_a, rerun_b) -> bool:
    """Agreement whenever either side halts; the side that missed gets the overhead slack."""
    if isinstance(a, Halted) and isinstance(b, Halted):
        return a.value == b.value
    if a is EXHAUSTED and b is EXHAUSTED:
        return True
    if a is EXHAUSTED:
        a = rerun_a()
    else:
        b = rerun_b()
    return isinstance(a, Halted) and isinstance(b, Halted) and a.value == b.value


def kernel_algebra() -> str:
    rng = random.Random(20261017)
    budget = 10**5
    library = [ADD, PROJ1, PROJ2, IDENTITY, const_index(7), finite_set_index({0, 3, 4})]
    halted = 0
    for k in range(200):
        e = library[k % len(library)] if k < 60 else _random_program(rng)
        y, x = rng.randrange(0, 40), rng.randrange(0, 40)
        left = run_clocked(smn(e, y), x, budget)
        right = run_clocked(e, pair(y, x), budget)
        halted += isinstance(left, Halted)
        assert _agree(left, right,
                      lambda: run_clocked(smn(e, y), x, budget + SMN_OVERHEAD),
                      lambda: run_clocked(e, pair(y, x), budget + SMN_OVERHEAD)), (e, y, x)

    transformers = [const_index(c) for c in library]
    bodies = [PROJ1, PROJ2, ADD] + [_random_program(rng) for _ in range(11)]
    for body in bodies:
        a = Asm()
        a.copy(1, 2)
        a.const(1, body)
        a.native(1, 2, "smn")
        transformers.append(a.index())
    assert len(transformers) == 20
    for f in transformers:
        e = fixpoint(f)
        fe = run_clocked(f, e, budget)
        assert isinstance(fe, Halted)
        for x in range(11):
            lhs = run_clocked(e, x, budget)
            rhs = run_clocked(fe.value, x, budget)
            # the fixpoint reaches phi_f(e) through one eval and a few set-up steps
            assert _agree(lhs, rhs, lambda: run_clocked(e, x, 2 * budget),
                          lambda: run_clocked(fe.value, x, 2 * budget)), (f, x)
    return f"200 s-m-n triples ({halted} halting), 20 fixpoints x 11 inputs"


# ---------------------------------------------------------------------------
# classical theorem


def _subsets(universe: range) -> list[frozenset[int]]:
    return [frozenset(c) for r in range(len(universe) + 1) for c in itertools.combinations(universe, r)]


def classical_theorem() -> str:
    counts = []
    for universe in (range(2), range(4)):
        fam = _subsets(universe)
        upsets = [sum(1 << j for j, b in enumerate(fam) if a <= b) for a in fam]
        opens = 0
        for mask in range(1 << len(fam)):
            k = [fam[i] for i in range(len(fam)) if mask >> i & 1]
            # definition: every superset of a member of K lies in K
            closed = all(upsets[i] & ~mask == 0 for i in range(len(fam)) if mask >> i & 1)
            a = classical_rice_shapiro_oracle(k, fam).verified
            b = monotone_check(k, fam).verified
            assert a == b == closed, (universe, mask)
            opens += closed
        counts.append((len(fam), 1 << len(fam), opens))
    # upward closed families of subsets of an n-set: Dedekind numbers 6 and 168
    assert [c[2] for c in counts] == [6, 168]
    return "; ".join(f"{n} members: {t} predicates, {o} open" for n, t, o in counts)


# ---------------------------------------------------------------------------
# tree normalizer


def tree_normalizer() -> str:
    trees = all_trees(6)
    assert len(trees) == 1772
    worst, worst_ins, checked = 0, 0, 0
    for tree in trees:
        members = {frozenset(delta_encode(y) for y in p) for p in tree_paths(set(tree.vertices))}
        codes = sorted(delta_encode(x) for x in tree.vertices)
        # one code just outside the tree
        extra = delta_encode(next((x + (a,)) for x in sorted(tree.vertices, key=len)
                                  for a in (0, 1, 2, 3) if x + (a,) not in tree.vertices))
        for r in range(len(codes) + 1):
            for sub in itertools.combinations(codes, r):
                for f in (frozenset(sub), frozenset(sub) | {extra}):
                    out, reached = sigma_T_limit(tree, FiniteCeSet(f), INF)
                    assert reached is not None
                    if f in members:
                        assert out == f
                        worst = max(worst, reached)
                    else:
                        assert out == frozenset() or out in members
                    checked += 1

    ins = inseparable_tree().truncate(6)
    members = {frozenset(delta_encode(y) for y in p) for p in tree_paths(set(ins.vertices))}
    for x in ins.vertices:
        out, reached = sigma_T_limit(ins, FiniteCeSet(path_codes(x)), INF)
        assert out == path_codes(x) and reached is not None
        worst_ins = max(worst_ins, reached)
    rng = random.Random(6)
    codes = sorted(delta_encode(x) for x in ins.vertices)
    for _ in range(3000):
        f = frozenset(c for c in codes if rng.random() < 0.4)
        out, _ = sigma_T_limit(ins, FiniteCeSet(f), INF)
        assert out == frozenset() or out in members
        checked += 1
    # a code c enters its canonical presentation no earlier than stage c
    return (f"{checked} sets over 1773 trees; path limits reached by stage {worst} "
            f"(small trees), {worst_ins:.3g} (inseparable, codes up to {max(codes):.3g})")


# ---------------------------------------------------------------------------
# domains


def domain_construction() -> str:
    fixtures = [d for d in domain_fixtures() if len(d) <= 6]
    settled = 0
    for d in fixtures:
        v = alpha_c_check(d)
        assert v.verified, (d.name, v.witness)
        settled = max(settled, v.saturation_stage)
        space, w = domain_to_modular(d)
        assert ee_space_check(space).verified, d.name
        assert modular_check(space, w).verified, d.name
    return f"{len(fixtures)} domains, every element recovered by stage {settled}"


# ---------------------------------------------------------------------------
# fixture spaces


def xt_fixture_trees() -> list:
    small = all_trees(4)
    five = [t for t in all_trees(5) if len(t.vertices) == 5][::4]
    return small + five + [inseparable_tree().truncate(3)]


def intersection_identity() -> str:
    spaces = [build_X_T(t) for t in xt_fixture_trees()]
    spaces += [domain_to_modular(d) for d in domain_fixtures()]
    count = 0
    for space, w in spaces:
        idx = space.indices
        for r in range(4):
            for v in itertools.combinations(idx, r):
                assert intersection_identity_check(space, w, v).verified, (space.name, v)
                count += 1
    return f"{count} index sets V over {len(spaces)} spaces"


def generalized_theorem() -> str:
    total, non_open = 0, 0
    trees = xt_fixture_trees()
    for tree in trees:
        space, w = build_X_T(tree)
        pool = xt_index_pool(space)
        pts = list(space.points)
        for r in range(len(pts) + 1):
            for k in itertools.combinations(pts, r):
                v = rs_consistency(space, w, k, pool)
                assert v.verified, v.witness
                total += 1
                non_open += not v.witness["upward_closed"]
    return f"{total} predicates over {len(trees)} trees ({non_open} non-open, traces re-verified)"


# ---------------------------------------------------------------------------
# branching


def branching_fixtures_run() -> str:
    out = []
    for inst in branching_fixtures():
        v = branching(inst, 10**6)
        assert v.verified, (inst.name, v.witness)
        eq = verify_branching(inst, v.witness["e"], v.witness["p"], bound=10, budget=10**6)
        assert eq.verified, (inst.name, eq.witness)
        out.append(f"{inst.name}: p={v.witness['p']} W_e={eq.witness['W_e']}")
    return "; ".join(out)


# ---------------------------------------------------------------------------
# product, diagonal class, projection, discreteness


def product_machinery() -> str:
    base = WnFamily(intersection_sigma([0, 1]), members=[frozenset(), {0}, {1}, {0, 1}], name="p01")
    prod = product_family(base)
    cands = [finite_set_index(m) for m in prod.family.members]
    v = wn_check(prod.family, cands, 10**5, 8)
    assert v.verified, v.witness

    members, supports = [{0}, {1}], [{0}, {1}]
    disc = WnFamily(discrete_sigma(members, supports), members=members, supports=supports)
    num = principal_numbering(disc)
    diag = diagonal_class_demo(disc, num, positive_witness(num, supports), budget=10**6, bound=8)
    assert diag.verified, diag.witness
    assert diag.witness["effectively_discrete"] and not diag.witness["contradiction_triggered"]

    rng = random.Random(50)
    prog = projection_h_program()
    for _ in range(50):
        d = dn_encode({pair(rng.randrange(6), rng.randrange(6)) for _ in range(rng.randint(0, 4))})
        expect = dn_encode({c for e in dn_decode(d) for c in _unpair(e)})
        assert projection_h(d) == expect
        r = run_clocked(prog, d, 10**6)
        assert isinstance(r, Halted) and r.value == expect

    ok = effective_discreteness_check([{0}, {1}], bound=8)
    assert ok.verified and [sorted(f) for f in ok.witness["supports"]] == [[0], [1]]
    bad = effective_discreteness_check([set(), {0}], bound=8)
    assert bad.refuted and bad.witness["absolute"]
    return (f"{len(cands)} product members pass wn_check; {len(diag.witness['rows'])} diagonal rows "
            f"agree; 50 projections; discreteness both ways")


def _unpair(n: int) -> tuple[int, int]:
    from oracles import cantor_unpair
    return cantor_unpair(n)


# ---------------------------------------------------------------------------
# determinism and snapshots


def _quiet(argv: list[str]) -> int:
    import contextlib
    import io
    with contextlib.redirect_stdout(io.StringIO()):
        return cli_main(argv)


def determinism(tmpdir: str) -> str:
    commands = [
        ["verify", "space", "xt1"],
        ["verify", "space-from-domain", "crown"],
        ["verify", "family", "p01"],    # refuted: not effectively discrete
        ["demo", "rs-forward-tree"],
        ["demo", "non-open-trace"],
        ["enumerate", "sigma-t", "fixture2", "(0 1 2)"],
    ]
    for i, cmd in enumerate(commands):
        blobs, codes = [], []
        for run in range(2):
            path = os.path.join(tmpdir, f"r{i}-{run}.json")
            codes.append(_quiet(cmd + ["--out", path]))
            with open(path, "rb") as fh:
                blobs.append(fh.read())
        assert blobs[0] == blobs[1] and codes[0] == codes[1], cmd

    jobs = [["we", "evens"], ["image", "succ"], ["sigma-t", "fixture2", "(0 1 2)"],
            ["alpha-c", "crown", "z"], ["h0", "p01"]]
    for i, job in enumerate(jobs):
        base = ["enumerate", *job, "--budget", "20000"]
        whole = os.path.join(tmpdir, f"j{i}-whole.json")
        _quiet(base + ["--stages", "60", "--out", whole])
        for cut in (0, 7, 25):
            snap = os.path.join(tmpdir, f"j{i}-{cut}.snap")
            part = os.path.join(tmpdir, f"j{i}-{cut}.json")
            _quiet(base + ["--stages", str(cut), "--snapshot", snap])
            _quiet(base + ["--stages", "60", "--resume", snap, "--out", part])
            with open(whole, "rb") as a, open(part, "rb") as b:
                assert a.read() == b.read(), (job, cut)
        with open(whole) as fh:
            assert json.load(fh)["status"] == "verified"
    return f"{len(commands)} commands byte-identical; {len(jobs)} job types resume exactly"


# ---------------------------------------------------------------------------

CRITERIA = [
    ("kernel algebra", kernel_algebra, 30),
    ("classical theorem", classical_theorem, 5),
    ("tree normalizer", tree_normalizer, 60),
    ("domain construction", domain_construction, 30),
    ("intersection identity", intersection_identity, 30),
    ("generalized theorem", generalized_theorem, 60),
    ("branching", branching_fixtures_run, 30),
    ("product machinery", product_machinery, 30),
    ("determinism and snapshots", determinism, 30),
]


def _timed(fn, *args):
    t = time.perf_counter()
    summary = fn(*args)
    return summary, time.perf_counter() - t


def _check(fn, limit, *args):
    summary, secs = _timed(fn, *args)
    print(f"\n  {summary} [{secs:.1f}s, limit {limit}s]")
    assert secs < limit, f"took {secs:.1f}s, limit {limit}s"


def test_kernel_algebra():
    _check(kernel_algebra, 30)


def test_classical_theorem():
    _check(classical_theorem, 5)


def test_tree_normalizer():
    _check(tree_normalizer, 60)


def test_domain_construction():
    _check(domain_construction, 30)


def test_intersection_identity():
    _check(intersection_identity, 30)


def test_generalized_theorem():
    _check(generalized_theorem, 60)


def test_branching():
    _check(branching_fixtures_run, 30)


def test_product_machinery():
    _check(product_machinery, 30)


def test_determinism_and_snapshots(tmp_path):
    _check(determinism, 30, str(tmp_path))


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn, limit in CRITERIA:
        try:
            with tempfile.TemporaryDirectory() as tmp:
                args = (tmp,) if fn is determinism else ()
                summary, secs = _timed(fn, *args)
            ok = secs < limit
            status = "PASS" if ok else "FAIL"
            detail = f"{summary} [{secs:.1f}s / {limit}s]"
        except AssertionError as exc:
            ok, status, detail = False, "FAIL", f"assertion failed: {exc!r}"[:300]
        failed += not ok
        print(f"{status}  {name}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
