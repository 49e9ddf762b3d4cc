"""Verb/target dispatch.  Each handler yields (Verdict, seconds) pairs."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterator

from ..domains import alpha_c_check, domain_to_modular
from ..kernel import decode_program, finite_set_index, fixpoint, format_program, pair
from ..numberings import (
    FiniteCeSet, WnFamily, effective_discreteness_check, evaluate, positive_witness,
    principal_numbering, wn_check,
)
from ..riceshapiro import (
    branching, branching_fixtures, diagonal_class_demo, non_open_witness, product_family,
    projection_h, rs_consistency, rs_forward, verify_branching, verify_non_open_trace, xt_index_pool,
)
from ..spaces import (
    Space, build_X_S, build_X_T, ee_space_check, homeomorphism_check, intersection_identity_check,
    modular_check,
)
from ..trees import explicit_tree, format_seq, path_codes, sigma_T_limit
from ..verdict import Status, Verdict
from .instance import Instance, seq_arg
from .jobs import JOB_KINDS, AlphaCJob, H0Job, ImageJob, Job, SigmaTJob, WeJob, input_set

DEFAULT_BUDGET = 10**5
DEFAULT_STAGES = 10**3
DEFAULT_BOUND = 10
# demos whose constructions need more steps than the general default
DEMO_BUDGETS = {"branching-basic": 10**6, "branching-empty": 10**6, "branching-uniform": 10**6,
                "diagonal-demo": 10**6}


class UsageError(Exception):
    pass


@dataclass
class Settings:
    budget: int
    stages: int
    bound: int

    def record(self) -> dict[str, Any]:
        return {"budget": self.budget, "stages": self.stages, "bound": self.bound,
                "defaults": {"budget": DEFAULT_BUDGET, "stages": DEFAULT_STAGES, "bound": DEFAULT_BOUND}}


Results = Iterator[tuple[Verdict, float]]


def timed(fn: Callable[[], Verdict]) -> tuple[Verdict, float]:
    t = time.perf_counter()
    v = fn()
    return v, time.perf_counter() - t


def _lookup(table: dict, name: str | None, what: str) -> Any:
    if name is None:
        raise UsageError(f"missing {what} name")
    if name not in table:
        raise UsageError(f"unknown {what} {name!r}")
    return table[name]


def _one(args: list[str], what: str) -> str:
    if len(args) != 1:
        raise UsageError(f"expected one {what} name")
    return args[0]


def _program(inst: Instance, ref: str) -> int:
    if ref.isdigit():
        return int(ref)
    return _lookup(inst.programs, ref, "program")


def _done(check: str, witness: Any, **kw: Any) -> Verdict:
    return Verdict(check, Status.VERIFIED, witness=witness, **kw)


# ---------------------------------------------------------------------------
# construct


def construct(inst: Instance, target: str, args: list[str], cfg: Settings) -> Results:
    if target == "program":
        e = _program(inst, _one(args, "program"))
        yield timed(lambda: _done("construct.program", {"index": e,
                                                        "text": format_program(decode_program(e))}))
    elif target == "fixpoint":
        f = _program(inst, _one(args, "program"))
        yield timed(lambda: _done("construct.fixpoint", {"transformer": f, "fixpoint": fixpoint(f)}))
    elif target == "space-from-tree":
        tree = _lookup(inst.trees, _one(args, "tree"), "tree")
        yield timed(lambda: _construct_xt(tree))
    elif target == "space-from-domain":
        d = _lookup(inst.domains, _one(args, "domain"), "domain")

        def go() -> Verdict:
            space, w = domain_to_modular(d)
            return _done("construct.space_from_domain", {
                "points": list(d.names),
                "basis": {str(n): [d.names[x] for x in sorted(space.alpha(n))] for n in space.indices},
                "witness_b": [d.names[b] for b in w.b]})
        yield timed(go)
    elif target == "space-from-family":
        fam = _family(inst, _one(args, "family"))

        def go() -> Verdict:
            xs = build_X_S(principal_numbering(fam), bound=min(cfg.bound, 8), budget=cfg.budget)
            return _done("construct.space_from_family", {
                "points": {str(p): sorted(xs.f(p)) for p in xs.space.points},
                "sigma_star": xs.sigma_star, "basis_indices": len(xs.space.indices)},
                budget=cfg.budget)
        yield timed(go)
    elif target == "product":
        fam = _family(inst, _one(args, "family"))

        def go() -> Verdict:
            pf = product_family(fam)
            return _done("construct.product", {"sigma_star": pf.sigma_star, "a": pf.a, "b": pf.b,
                                               "members": pf.family.members})
        yield timed(go)
    elif target == "h0":
        fam = _lookup(inst.families, _one(args, "family"), "family")
        yield timed(lambda: _done("construct.h0", {"sigma": fam.sigma, "h0": fam.h0}))
    else:
        raise UsageError(f"unknown construct target {target!r}")


def _construct_xt(tree: Any) -> Verdict:
    if not tree.explicit:
        raise UsageError("space-from-tree needs an explicit tree (use 'builtin inseparable depth N')")
    space, w = build_X_T(tree)
    return _done("construct.space_from_tree", {
        "points": [format_seq(x) for x in space.points],
        "basis": {str(n): [format_seq(x) for x in space.alpha(n)] for n in space.indices},
        "empty_index": space.meta["empty_index"],
        "witness_b": [format_seq(b) for b in w.b]})


def _family(inst: Instance, name: str) -> WnFamily:
    fam = _lookup(inst.families, name, "family")
    if fam.members is None:
        raise UsageError(f"family {name!r} has no explicit members")
    return fam


# ---------------------------------------------------------------------------
# enumerate


def make_job(inst: Instance, target: str, args: list[str], cfg: Settings) -> Job:
    if target in ("we", "image"):
        e = _program(inst, _one(args, "program"))
        return (WeJob if target == "we" else ImageJob)({"program": e})
    if target == "sigma-t":
        if len(args) != 2:
            raise UsageError("sigma-t needs TREE and INPUT (program name, index or vertex like '(0 1)')")
        tree = _lookup(inst.trees, args[0], "tree")
        src = args[1]
        entry: Any = seq_arg(src) if src.startswith("(") else _program(inst, src)
        params = {"tree": args[0], "input": format_seq(entry) if isinstance(entry, tuple) else entry}
        return SigmaTJob(params, tree=tree, wn=input_set(entry))
    if target == "alpha-c":
        if len(args) != 2:
            raise UsageError("alpha-c needs DOMAIN and ELEMENT (or a program for W_e)")
        d = _lookup(inst.domains, args[0], "domain")
        if args[1] in d.names:
            w = FiniteCeSet(d.approx(d.names.index(args[1])))
        else:
            w = input_set(_program(inst, args[1]))
        return AlphaCJob({"domain": args[0], "input": args[1]}, domain=d, w=w)
    if target == "h0":
        fam = _lookup(inst.families, _one(args, "family"), "family")
        return H0Job({"h0": fam.h0, "budget": cfg.budget})
    raise UsageError(f"unknown enumerate target {target!r} (one of {', '.join(JOB_KINDS)})")


def job_verdict(job: Job) -> Verdict:
    return _done(f"enumerate.{job.kind}", {"stage": job.stage, **job.result()},
                 saturation_stage=job.stage)


# ---------------------------------------------------------------------------
# verify


def verify(inst: Instance, target: str, args: list[str], cfg: Settings) -> Results:
    if target == "space":
        name = _one(args, "space")
        entry = _lookup(inst.spaces, name, "space")
        if entry["kind"] == "explicit":
            space = inst.explicit_space(name)
            yield timed(lambda: ee_space_check(space))
            return
        yield from verify(inst, f"space-{entry['kind']}", [entry["ref"]], cfg)
    elif target == "space-from-tree":
        tree = _lookup(inst.trees, _one(args, "tree"), "tree")
        if not tree.explicit:
            raise UsageError("space-from-tree needs an explicit tree")
        space, w = build_X_T(tree)
        yield from _space_checks(space, w, cfg)
        yield timed(lambda: _tree_convergence(tree, cfg))
    elif target == "space-from-domain":
        d = _lookup(inst.domains, _one(args, "domain"), "domain")
        yield timed(lambda: alpha_c_check(d, stages=min(cfg.stages, 200)))
        space, w = domain_to_modular(d)
        yield from _space_checks(space, w, cfg)
    elif target == "space-from-family":
        fam = _family(inst, _one(args, "family"))
        box: dict[str, Any] = {}

        def build() -> Verdict:
            box["xs"] = build_X_S(principal_numbering(fam), bound=min(cfg.bound, 8), budget=cfg.budget)
            return ee_space_check(box["xs"].space)
        yield timed(build)
        yield timed(lambda: homeomorphism_check(box["xs"]))
    elif target == "family":
        fam = _family(inst, _one(args, "family"))
        yield from _family_checks(fam, cfg)
    elif target == "product":
        fam = _family(inst, _one(args, "family"))
        pf = product_family(fam)
        cands = [finite_set_index(m) for m in pf.family.members]
        yield timed(lambda: wn_check(pf.family, cands, cfg.budget, min(cfg.bound, 8)))
    elif target == "rs":
        tree = _lookup(inst.trees, _one(args, "tree"), "tree")
        if not tree.explicit:
            raise UsageError("rs needs an explicit tree")
        yield timed(lambda: _rs_all(tree))
    elif target == "tree":
        tree = _lookup(inst.trees, _one(args, "tree"), "tree")
        if not tree.explicit:
            raise UsageError("tree checks need an explicit tree")
        yield timed(lambda: _tree_convergence(tree, cfg))
    elif target == "fixpoint":
        f = _program(inst, _one(args, "program"))
        yield timed(lambda: _fixpoint_check(f, cfg))
    elif target == "scenario":
        raise UsageError("scenarios are run with the verb they name")  # handled by the caller
    else:
        raise UsageError(f"unknown verify target {target!r}")


def _space_checks(space: Space, w: Any, cfg: Settings) -> Results:
    yield timed(lambda: ee_space_check(space))
    yield timed(lambda: modular_check(space, w, cfg.stages))

    def inter() -> Verdict:
        idx = list(space.indices)
        size = 0
        for r in range(4):
            for v in itertools.combinations(idx, r):
                out = intersection_identity_check(space, w, v, cfg.stages)
                size += 1
                if not out.verified:
                    return out
        return _done("intersection_identity", {"subsets": size, "max_size": 3})
    yield timed(inter)


def _tree_convergence(tree: Any, cfg: Settings) -> Verdict:
    worst = 0
    for x in tree.sorted_vertices():
        want = path_codes(x)
        got, stage = sigma_T_limit(tree, FiniteCeSet(want), float("inf"))
        if got != want or stage is None:
            return Verdict("sigma_t_convergence", Status.REFUTED,
                           witness={"vertex": format_seq(x), "limit": sorted(got)})
        worst = max(worst, stage)
    return _done("sigma_t_convergence", {"vertices": len(tree.vertices)}, saturation_stage=worst)


def _rs_all(tree: Any) -> Verdict:
    space, w = build_X_T(tree)
    pool = xt_index_pool(space)
    pts = list(space.points)
    counts = {"upward_closed": 0, "not_upward_closed": 0}
    for r in range(len(pts) + 1):
        for k in itertools.combinations(pts, r):
            v = rs_consistency(space, w, k, pool)
            if not v.verified:
                return v
            counts["upward_closed" if v.witness["upward_closed"] else "not_upward_closed"] += 1
    return _done("rs_consistency", {"predicates": counts, "pool": [n for n, _ in pool]})


def _fixpoint_check(f: int, cfg: Settings) -> Verdict:
    e = fixpoint(f)
    g = evaluate(f, e, cfg.budget)
    if g is None:
        return Verdict("fixpoint", Status.UNKNOWN, witness={"reason": "transformer did not halt"},
                       budget=cfg.budget)
    for x in range(cfg.bound + 1):
        a, b = evaluate(e, x, cfg.budget), evaluate(g, x, cfg.budget)
        if a is not None and b is not None and a != b:
            return Verdict("fixpoint", Status.REFUTED, witness={"x": x, "e": a, "f(e)": b},
                           budget=cfg.budget)
        if (a is None) != (b is None):
            return Verdict("fixpoint", Status.UNKNOWN, witness={"x": x, "one_side_halts": True},
                           budget=cfg.budget)
    return _done("fixpoint", {"fixpoint": e, "bound": cfg.bound}, budget=cfg.budget)


def _family_checks(fam: WnFamily, cfg: Settings) -> Results:
    cands = [finite_set_index(m) for m in fam.members]
    yield timed(lambda: wn_check(fam, cands, cfg.budget, cfg.bound))
    yield timed(lambda: principal_numbering(fam).surjectivity(cfg.bound, cfg.budget))
    yield timed(lambda: effective_discreteness_check(fam.members, cfg.bound))


# ---------------------------------------------------------------------------
# demos

DEMOS = ("branching-basic", "branching-empty", "branching-uniform", "rs-forward-tree",
         "diagonal-demo", "non-open-trace")


def _demo_tree() -> Any:
    return explicit_tree([(), (0,), (1,), (0, 0)], "fixture1")


def demo(inst: Instance, target: str, args: list[str], cfg: Settings) -> Results:
    if args:
        raise UsageError("demos take no name")
    if target.startswith("branching-"):
        insts = {i.name: i for i in branching_fixtures()}
        if target not in insts:
            raise UsageError(f"unknown demo {target!r}")
        bi = insts[target]
        box: dict[str, Any] = {}

        def build() -> Verdict:
            v = branching(bi, cfg.budget)
            box["v"] = v
            return v
        yield timed(build)
        v = box["v"]
        if v.verified:
            yield timed(lambda: verify_branching(bi, v.witness["e"], v.witness["p"], cfg.bound, cfg.budget))
    elif target == "rs-forward-tree":
        space, w = build_X_T(_demo_tree())
        cases = (({(0,), (0, 0)}, Status.VERIFIED), ({(0,)}, Status.REFUTED), (set(), Status.VERIFIED))
        for k, want in cases:
            yield timed(lambda k=k, want=want: _expect(rs_forward(space, w, k), k, want))
    elif target == "non-open-trace":
        space, w = build_X_T(_demo_tree())
        k, a = {(0,)}, (0,)
        box = {}

        def trace() -> Verdict:
            tr = non_open_witness(space, w, k, a)
            box["tr"] = tr
            return _done("non_open_witness", tr.to_record())
        yield timed(trace)
        yield timed(lambda: verify_non_open_trace(space, w, k, a, box["tr"]))
    elif target == "diagonal-demo":
        members = [frozenset({0}), frozenset({1})]
        from ..numberings import discrete_sigma
        fam = WnFamily(discrete_sigma(members, members), members=members, name="{{0},{1}}")
        num = principal_numbering(fam)
        pw = positive_witness(num, members)
        yield timed(lambda: diagonal_class_demo(fam, num, pw, budget=cfg.budget,
                                                bound=min(cfg.bound, 8)))

        def proj() -> Verdict:
            i = 1 << pair(0, 1)
            return _done("projection_h", {"D_i": [pair(0, 1)], "D_h(i)": sorted(_bits(projection_h(i)))})
        yield timed(proj)
        yield timed(lambda: effective_discreteness_check(members, min(cfg.bound, 8)))
    else:
        raise UsageError(f"unknown demo {target!r} (one of {', '.join(DEMOS)})")


def _bits(n: int) -> set[int]:
    return {i for i in range(n.bit_length()) if n >> i & 1}


def _expect(v: Verdict, k: set, want: Status) -> Verdict:
    """A demo case passes when the check reaches the outcome it is meant to show."""
    status = Status.VERIFIED if v.status is want else Status.REFUTED
    return Verdict(f"demo.{v.check}", status,
                   witness={"K": sorted(k), "expected": want.value, "outcome": v.to_record()})


HANDLERS = {"construct": construct, "verify": verify, "demo": demo}
