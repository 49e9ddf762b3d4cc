"""The branching lemma, monotonicity, both directions of the generalized
Rice-Shapiro theorem on explicit spaces, and the product/diagonal machinery."""

from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Sequence

from .kernel import (
    Asm, Halted, IDENTITY, LOOP, const_index, dn_decode, dn_encode, finite_set_index,
    fixpoint, pair, run_clocked, unpair, we_stage,
)
from .numberings import (
    CeSet, FiniteCeSet, IndexSetEnumerator, Numbering, TruncatedCeSet, WnFamily, ce_set,
    effective_discreteness_check, evaluate,
)
from .spaces import ModularWitness, Space, eff_open_denotation, sorted_points, specialization_leq
from .trees import path_codes
from .verdict import Status, Trace, Verdict

__all__ = [
    "BranchingInstance", "branching", "branching_fixtures", "verify_branching",
    "monotone_check", "upward_closure_check", "rs_forward", "non_open_witness",
    "index_set_agreement", "xt_index_pool", "verify_non_open_trace", "rs_consistency", "ProductFamily", "product_family",
    "product_members", "projection_h", "projection_h_program", "diagonal_class_demo",
]

Point = Hashable


# ---------------------------------------------------------------------------
# branching


@dataclass(frozen=True)
class BranchingInstance:
    """W (index w), V presented by V_p = W_v^p, and a total r."""

    w: int
    v: int
    r: int
    name: str = ""


def _branching_body(inst: BranchingInstance) -> int:
    """Program on pair(z, x): doubling t until z shows up in W within t steps."""
    a = Asm()
    a.native(2, 1, "fst")       # z, our own index
    a.native(3, 1, "snd")       # x
    a.const(4, 1)               # t runs through 1, 2, 4, ...
    a.zero(9)
    a.label("stage")
    a.const(5, inst.w)
    a.native(5, 4, "pair")
    a.native(5, 2, "clocked")   # z in W within t steps?
    a.jeq(5, 9, "still")
    # switch: p = t, halt iff x in V_p or x in W_{r(p)}
    a.const(6, inst.r)
    a.native(6, 4, "eval")      # r(p)
    a.zero(7)                   # u
    a.label("both")
    a.const(8, inst.v)
    a.native(8, 4, "pair")
    a.native(8, 3, "bounded")
    a.jeq(8, 9, "other")
    a.jump("end")
    a.label("other")
    a.copy(6, 8)
    a.native(8, 7, "pair")
    a.native(8, 3, "clocked")
    a.jeq(8, 9, "widen")
    a.jump("end")
    a.label("widen")
    a.succ(7)
    a.jump("both")
    a.label("still")
    a.const(8, inst.v)
    a.native(8, 4, "pair")
    a.native(8, 3, "bounded")   # x in V_t ?
    a.jeq(8, 9, "next")
    a.jump("end")
    a.label("next")
    a.native(4, 4, "add")
    a.jump("stage")
    return a.index()


def _transformer(body: int) -> int:
    """Index of z |-> smn(body, z)."""
    a = Asm()
    a.copy(1, 2)
    a.const(1, body)
    a.native(1, 2, "smn")
    return a.index()


def branching(inst: BranchingInstance, budget: int) -> Verdict:
    """e in W and p with W_e = V_p u W_{r(p)}; Unknown if e has not entered W within budget."""
    e = fixpoint(_transformer(_branching_body(inst)))
    hit = run_clocked(inst.w, e, budget)
    if not isinstance(hit, Halted):
        return Verdict("branching", Status.UNKNOWN, witness={"e": e, "reason": "e not yet in W"},
                       budget=budget)
    p = 1
    while p < hit.steps:
        p *= 2
    return Verdict("branching", Status.VERIFIED, witness={"e": e, "p": p},
                   budget=budget, saturation_stage=p)


def verify_branching(inst: BranchingInstance, e: int, p: int, bound: int, budget: int) -> Verdict:
    """Compare W_e with V_p u W_{r(p)} on 0..bound."""
    rp = evaluate(inst.r, p, budget)
    if rp is None:
        return Verdict("branching.equation", Status.UNKNOWN, witness={"reason": "r(p) did not halt"},
                       budget=budget)
    vp = we_stage(inst.v, p)
    rows = []
    for x in range(bound + 1):
        lhs = evaluate(e, x, budget) is not None
        rhs = x in vp or evaluate(rp, x, budget) is not None
        rows.append((x, lhs, rhs))
    bad = [r for r in rows if r[1] != r[2]]
    if bad:
        # a missing halt on the left may be the budget; an extra halt is a contradiction
        status = Status.REFUTED if any(r[1] and not r[2] for r in bad) else Status.UNKNOWN
        return Verdict("branching.equation", status, witness={"mismatch": bad}, budget=budget)
    return Verdict("branching.equation", Status.VERIFIED,
                   witness={"W_e": [x for x, l, _ in rows if l], "bound": bound, "p": p},
                   budget=budget)


def _zero_in_w_program(pad: int = 0) -> int:
    """W = {n : 0 in W_n}; pad adds no-op instructions for an equivalent index."""
    a = Asm()
    for _ in range(pad):
        a.copy(2, 2)
    a.zero(2)
    a.native(1, 2, "eval")
    return a.index()


def branching_fixtures() -> list[BranchingInstance]:
    zero_w = _zero_in_w_program()
    r01 = const_index(finite_set_index({0, 1}))
    return [
        BranchingInstance(zero_w, finite_set_index({0}), r01, "branching-basic"),
        BranchingInstance(IDENTITY, LOOP, const_index(LOOP), "branching-empty"),
        BranchingInstance(_zero_in_w_program(pad=2), finite_set_index({0}), r01, "branching-uniform"),
    ]


# ---------------------------------------------------------------------------
# monotonicity and openness on explicit spaces


def monotone_check(k: Iterable[Iterable[int]], family: Iterable[Iterable[int]]) -> Verdict:
    """A inside B, A in K, B in the family imply B in K."""
    fam, ups = _family_table(tuple(frozenset(m) for m in family))
    pos = {m: i for i, m in enumerate(fam)}
    mask = 0
    for m in k:
        mask |= 1 << pos[frozenset(m)]
    for i in range(len(fam)):
        if mask >> i & 1:
            bad = ups[i] & ~mask
            if bad:
                j = (bad & -bad).bit_length() - 1
                return Verdict("monotone", Status.REFUTED, witness={"A": fam[i], "B": fam[j]})
    return Verdict("monotone", Status.VERIFIED)


@lru_cache(maxsize=32)
def _family_table(raw: tuple[frozenset[int], ...]) -> tuple[list[frozenset[int]], list[int]]:
    """Distinct members by size then content, with superset bitmasks."""
    fam = sorted(set(raw), key=lambda s: (len(s), sorted(s)))
    ups = [sum(1 << j for j, b in enumerate(fam) if a <= b) for a in fam]
    return fam, ups


def upward_closure_check(space: Space, k: Iterable[Point]) -> Verdict:
    ks = set(k)
    for a in sorted_points(ks):
        for b in sorted_points(space.points):
            if b not in ks and specialization_leq(space, a, b):
                return Verdict("upward_closed", Status.REFUTED, witness={"a": a, "b": b})
    return Verdict("upward_closed", Status.VERIFIED)


def rs_forward(space: Space, w: ModularWitness, k: Iterable[Point]) -> Verdict:
    """K = U{O_n : b_n in K} when K is upward closed (= open on these spaces)."""
    ks = frozenset(k)
    up = upward_closure_check(space, ks)
    if not up.verified:
        return Verdict("rs_forward", Status.REFUTED,
                       witness={"open": False, "point": up.witness["a"],
                                "extension_outside": up.witness["b"]})
    chosen = [n for n, b in enumerate(w.b) if b in ks]
    indices: set[int] = set()
    union: set = set()
    for n in chosen:
        o = w.o[n]
        union |= eff_open_denotation(space, o)
        if isinstance(o, CeSet):
            o = o.stage(o.next_change(0) or 0)
        indices |= set(o)
    if frozenset(union) != ks:
        return Verdict("rs_forward", Status.REFUTED,
                       witness={"open": True, "representation_mismatch": sorted_points(union)})
    return Verdict("rs_forward", Status.VERIFIED,
                   witness={"witness_indices": chosen, "basis_indices": sorted(indices),
                            "note": "open = upward closed on explicit spaces"})


# ---------------------------------------------------------------------------
# index sets on X_T


def xt_index_pool(space: Space, small: int = 12, cap: int = 40, extra: int = 4) -> list[tuple[str, CeSet]]:
    """Names for the numbering gamma(k) = W_{sigma_T(k)}, each given by W_k.

    Small program indices are read through a stage cap; every vertex gets the
    canonical set of its path; a few non-path sets are added.
    """
    pool: list[tuple[str, CeSet]] = []
    for k in range(small):
        pool.append((f"prog:{k}", TruncatedCeSet(ce_set(k), cap)))
    verts = list(space.points)
    for x in verts:
        pool.append((f"path:{x}", FiniteCeSet(path_codes(x))))
    pairs = [(x, y) for x, y in itertools.combinations(verts, 2)
             if not (x[:len(y)] == y or y[:len(x)] == x)]
    for x, y in pairs[:extra]:
        pool.append((f"fork:{x}|{y}", FiniteCeSet(path_codes(x) | path_codes(y))))
    return pool


def _settle_stage(pool: Sequence[tuple[str, CeSet]], space: Space) -> int:
    top = max(space.indices, default=0)
    for _, c in pool:
        s = 0
        while (t := c.next_change(s)) is not None:
            s = t
        top = max(top, s)
    return top + 2


def verify_non_open_trace(space: Space, w: ModularWitness, k: Iterable[Point], a: Point,
                          trace: Trace) -> Verdict:
    """Recheck every stage record of a non-open trace by brute force."""
    ks = frozenset(k)
    opens = [eff_open_denotation(space, o) for o in w.o]
    stages = [r for r in trace.records if r.get("kind") == "stage"]
    if not stages:
        return Verdict("non_open_trace", Status.REFUTED, witness={"reason": "no stage records"})
    for r in stages:
        inter = frozenset(space.points)
        for i in r["V_m"]:
            inter &= space.alpha(i)
        n = r["n"]
        ok = (n is not None and r.get("point") is not None
              and a in opens[n] and w.b[n] in inter
              and r["gamma_h"] == r["point"] and r["point"] not in ks and r["point"] in inter)
        if not ok:
            return Verdict("non_open_trace", Status.REFUTED, witness={"record": r})
    return Verdict("non_open_trace", Status.VERIFIED, witness={"stages": len(stages)})


def rs_consistency(space: Space, w: ModularWitness, k: Iterable[Point],
                   pool: Sequence[tuple[str, CeSet]]) -> Verdict:
    """Representation exists iff K is upward closed iff the enumerator matches brute force;
    for non-open K the trace at a violating point re-verifies."""
    ks = frozenset(k)
    up = upward_closure_check(space, ks)
    fwd = rs_forward(space, w, ks)
    agree = index_set_agreement(space, w, ks, pool)
    witness: dict[str, Any] = {"K": sorted_points(ks), "upward_closed": up.verified,
                               "representation": fwd.verified, "enumerator_matches": agree.verified}
    if not (up.verified == fwd.verified == agree.verified):
        return Verdict("rs_consistency", Status.REFUTED, witness=witness)
    if not up.verified:
        a = up.witness["a"]
        trace = non_open_witness(space, w, ks, a, pool)
        check = verify_non_open_trace(space, w, ks, a, trace)
        witness["trace_point"] = a
        witness["trace"] = check.status
        if not check.verified:
            witness["trace_failure"] = check.witness
            return Verdict("rs_consistency", Status.REFUTED, witness=witness)
    return Verdict("rs_consistency", Status.VERIFIED, witness=witness)


def index_set_agreement(space: Space, w: ModularWitness, k: Iterable[Point],
                        pool: Sequence[tuple[str, CeSet]]) -> Verdict:
    """Compare the enumerator for V_K = {basis of O_n : b_n in K} with brute-force Ix(K) on pool."""
    numbering = space.meta["numbering"]
    ks = frozenset(k)
    v = set()
    for n, b in enumerate(w.b):
        if b in ks:
            v |= set(w.o[n])
    enum = IndexSetEnumerator(numbering, FiniteCeSet(v))
    s = _settle_stage(pool, space)
    enumerated = sorted(name for name, c in pool if enum.accepts(c, s))
    brute = sorted(name for name, c in pool if numbering.point(c) in ks)
    status = Status.VERIFIED if enumerated == brute else Status.REFUTED
    return Verdict("index_set", status,
                   witness={"enumerated": enumerated, "brute_force": brute, "stage": s})


def non_open_witness(space: Space, w: ModularWitness, k: Iterable[Point], a: Point,
                     pool: Sequence[tuple[str, CeSet]] | None = None) -> Trace:
    """Records (U_m, n(m), h(m)) along the presentation of A_a."""
    numbering = space.meta["numbering"]
    ks = frozenset(k)
    trace = Trace("non_open")
    opens = [eff_open_denotation(space, o) for o in w.o]
    if a not in ks:
        trace.add(kind="precondition", holds=False, reason="a is not in K")
        return trace
    for n, o in enumerate(opens):
        if a in o and o <= ks:
            trace.add(kind="precondition", holds=False, reason="K is open at a", n=n,
                      O_n=sorted_points(o))
            return trace
    trace.add(kind="precondition", holds=True, a=a)
    pool = pool if pool is not None else xt_index_pool(space)
    limits = {name: numbering.point(c) for name, c in pool}
    a_set = FiniteCeSet(space.profile(a))
    m = 0
    while True:
        vm = sorted(a_set.stage(m))
        inter = frozenset(space.points)
        for i in vm:
            inter &= space.alpha(i)
        u_m = sorted(name for name, x in limits.items() if x is not None and x in inter)
        n_m = next((n for n, (b, o) in enumerate(zip(w.b, opens)) if a in o and b in inter), None)
        outside = sorted_points(opens[n_m] - ks) if n_m is not None else []
        if not outside:
            trace.add(kind="stage", m=m, V_m=vm, U_m=u_m, n=n_m, point=None)
            break
        c = outside[0]
        h_m = finite_set_index(path_codes(c))
        trace.add(kind="stage", m=m, V_m=vm, U_m=u_m, n=n_m, b_n=w.b[n_m], point=c, h=h_m,
                  gamma_h=numbering.point(h_m))
        nxt = a_set.next_change(m)
        if nxt is None:
            break
        m = nxt
    return trace


# ---------------------------------------------------------------------------
# the product family


def _projection_program(first: bool) -> int:
    """On pair(n, x): halt iff pair(x, y) (or pair(y, x)) is in W_n for some y."""
    a = Asm()
    a.native(2, 1, "fst")       # n
    a.native(3, 1, "snd")       # x
    a.zero(4)                   # c = pair(y, t)
    a.zero(9)
    a.label("next")
    a.native(5, 4, "fst")       # y
    a.native(6, 4, "snd")       # t
    if first:
        a.copy(3, 7)
        a.native(7, 5, "pair")
    else:
        a.copy(5, 7)
        a.native(7, 3, "pair")
    a.copy(2, 8)
    a.native(8, 6, "pair")
    a.native(8, 7, "bounded")
    a.jeq(8, 9, "miss")
    a.jump("end")
    a.label("miss")
    a.succ(4)
    a.jump("next")
    return a.index()


def _product_program() -> int:
    """On pair(pair(i, j), pair(x, y)): halt iff x in W_i and y in W_j."""
    a = Asm()
    a.native(2, 1, "fst")
    a.native(3, 1, "snd")
    a.native(4, 2, "fst")       # i
    a.native(5, 2, "snd")       # j
    a.native(6, 3, "fst")       # x
    a.native(7, 3, "snd")       # y
    a.native(4, 6, "eval")
    a.native(5, 7, "eval")
    return a.index()


def _smn_map(body: int) -> int:
    a = Asm()
    a.copy(1, 2)
    a.const(1, body)
    a.native(1, 2, "smn")
    return a.index()


@dataclass
class ProductFamily:
    base: WnFamily
    sigma_star: int
    a: int          # n |-> index of the first projection of W_n
    b: int          # n |-> index of the second projection
    family: WnFamily


def product_members(members: Iterable[Iterable[int]]) -> list[frozenset[int]]:
    """Distinct sets c(A x B) over members A, B."""
    ms = [frozenset(m) for m in members]
    out = {frozenset(pair(x, y) for x in a for y in b) for a in ms for b in ms}
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def product_family(base: WnFamily) -> ProductFamily:
    a = _smn_map(_projection_program(True))
    b = _smn_map(_projection_program(False))
    p = Asm()
    p.copy(1, 9)
    p.const(2, a)
    p.native(2, 9, "eval")
    p.const(3, base.sigma)
    p.native(3, 2, "eval")      # sigma(a(n))
    p.const(4, b)
    p.native(4, 9, "eval")
    p.const(5, base.sigma)
    p.native(5, 4, "eval")      # sigma(b(n))
    p.native(3, 5, "pair")
    p.const(1, _product_program())
    p.native(1, 3, "smn")
    sigma_star = p.index()
    members = product_members(base.members) if base.members is not None else None
    fam = WnFamily(sigma_star, members=members, name=f"{base.name}*" if base.name else "product")
    return ProductFamily(base, sigma_star, a, b, fam)


# ---------------------------------------------------------------------------
# projection closure and the diagonal class


def projection_h(i: int) -> int:
    """D_{h(i)} = {x : some y has pair(x, y) or pair(y, x) in D_i}."""
    out = set()
    for c in dn_decode(i):
        x, y = unpair(c)
        out.update((x, y))
    return dn_encode(out)


def projection_h_program() -> int:
    """The same map as a program."""
    a = Asm()
    a.copy(1, 5)                # remaining bits
    a.zero(2)                   # result
    a.zero(3)                   # c
    a.const(4, 1)               # 2^c
    a.zero(9)
    a.const(10, 1)
    a.label("loop")
    a.jeq(5, 9, "done")
    a.copy(1, 6)
    a.native(6, 3, "bit")
    a.jeq(6, 10, "take")
    a.jump("advance")
    a.label("take")
    a.native(5, 4, "monus")
    for reg_op in ("fst", "snd"):
        a.native(7, 3, reg_op)      # coordinate
        # skip when already present
        a.copy(2, 8)
        a.native(8, 7, "bit")
        a.jeq(8, 10, f"have_{reg_op}")
        a.const(11, 1)              # 2^coordinate by doubling
        a.zero(12)
        a.label(f"pow_{reg_op}")
        a.jeq(12, 7, f"add_{reg_op}")
        a.native(11, 11, "add")
        a.succ(12)
        a.jump(f"pow_{reg_op}")
        a.label(f"add_{reg_op}")
        a.native(2, 11, "add")
        a.label(f"have_{reg_op}")
    a.label("advance")
    a.native(4, 4, "add")
    a.succ(3)
    a.jump("loop")
    a.label("done")
    a.copy(2, 1)
    return a.index()


def diagonal_class_demo(base: WnFamily, numbering: Numbering, positive: int,
                        budget: int = 10**6, bound: int = 8) -> Verdict:
    """K = {c(A x A)} over the product family; Ix(K) on canonical product indices.

    An index n of the product numbering lies in Ix(K) iff its two projections
    are named equally; the enumerator asks the positivity witness of the base
    numbering, brute force compares the sets themselves.
    """
    prod = product_family(base)
    rows = []
    for m in prod.family.members:
        n = finite_set_index(m)
        pa = evaluate(prod.a, n, budget)
        pb = evaluate(prod.b, n, budget)
        na = numbering.reduce_index(pa, budget) if pa is not None else None
        nb = numbering.reduce_index(pb, budget) if pb is not None else None
        accepted = (na is not None and nb is not None
                    and evaluate(positive, pair(na, nb), budget) is not None)
        diagonal = any(m == frozenset(pair(x, y) for x in a for y in a) for a in base.members)
        rows.append({"member": m, "index_names": [na, nb], "enumerated": accepted,
                     "diagonal": diagonal})
    discrete = effective_discreteness_check(base.members, bound)
    agree = all(r["enumerated"] == r["diagonal"] for r in rows)
    return Verdict("diagonal_class", Status.VERIFIED if agree else Status.REFUTED,
                   witness={"rows": rows, "effectively_discrete": discrete.verified,
                            "contradiction_triggered": not discrete.verified},
                   budget=budget)
