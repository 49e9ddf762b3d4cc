"""c.e. sets, computable sequences, wn-families and their numberings."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Collection, Iterable, Protocol, Sequence

from .kernel import (
    Asm, Halted, const_index, dn_decode, dn_encode, finite_set_index, finite_set_steps,
    lookup_index, match_finite_set, decode_program, pair, run_clocked, smn, we_stage,
)
from .verdict import Status, Verdict

__all__ = [
    "CeSet", "ProgramCeSet", "FiniteCeSet", "TruncatedCeSet", "ce_set", "observe", "evaluate",
    "ComputableCeSequence", "StrongFiniteSequence", "WnFamily", "Numbering",
    "intersection_sigma", "discrete_sigma", "constant_sigma", "h0_from_sigma",
    "principal_numbering", "wn_check", "IndexSetEnumerator", "index_set_enumerator",
    "effective_discreteness_check", "positive_witness", "positivity_check",
    "classical_rice_shapiro_oracle", "below",
]


def evaluate(e: int, x: int, budget: int) -> int | None:
    """phi_e(x) if it halts within budget steps, else None."""
    r = run_clocked(e, x, budget)
    return r.value if isinstance(r, Halted) else None


def observe(e: int, bound: int, budget: int) -> frozenset[int]:
    """{x <= bound : phi_e(x) halts within budget}."""
    return frozenset(x for x in range(bound + 1) if evaluate(e, x, budget) is not None)


def below(members: Collection[int], bound: int) -> frozenset[int]:
    if isinstance(members, (set, frozenset)):
        return frozenset(x for x in members if x <= bound)
    return frozenset(x for x in range(bound + 1) if x in members)


# ---------------------------------------------------------------------------
# c.e. sets with presentations


class CeSet:
    """A c.e. set with its presentation s |-> W^s."""

    index: int | None = None

    def stage(self, s: int) -> frozenset[int]:
        raise NotImplementedError

    def next_change(self, s: int) -> int | None:
        """Least t > s at which stage(t) may differ from stage(s); None if never."""
        return s + 1


class ProgramCeSet(CeSet):
    def __init__(self, index: int) -> None:
        self.index = index

    def stage(self, s: int) -> frozenset[int]:
        return we_stage(self.index, s)

    def __repr__(self) -> str:
        return f"ProgramCeSet({self.index})"


class FiniteCeSet(CeSet):
    """W_e for the canonical finite-set program e; stages in closed form.

    Element x enters at stage max(x, steps(x)), exactly as we_stage would
    compute by running the program.
    """

    def __init__(self, items: Iterable[int]) -> None:
        self.items = frozenset(items)
        self.enters = {x: max(x, finite_set_steps(self.items, x)) for x in self.items}
        self._times = sorted(set(self.enters.values()))

    def stage(self, s: int) -> frozenset[int]:
        return frozenset(x for x, t in self.enters.items() if t <= s)

    def next_change(self, s: int) -> int | None:
        for t in self._times:
            if t > s:
                return t
        return None

    @property
    def index(self) -> int:  # type: ignore[override]
        return finite_set_index(self.items)

    @property
    def settles(self) -> int:
        return self._times[-1] if self._times else 0

    def __repr__(self) -> str:
        return f"FiniteCeSet({sorted(self.items)})"


class TruncatedCeSet(CeSet):
    """The presentation of base frozen after stage cap (a budgeted view)."""

    def __init__(self, base: CeSet, cap: int) -> None:
        self.base = base
        self.cap = cap
        self.index = base.index

    def stage(self, s: int) -> frozenset[int]:
        return self.base.stage(min(s, self.cap))

    def next_change(self, s: int) -> int | None:
        if s >= self.cap:
            return None
        t = self.base.next_change(s)
        return None if t is None else min(t, self.cap)


@lru_cache(maxsize=4096)
def ce_set(e: int) -> CeSet:
    """CeSet for index e, using the closed form for finite-set programs."""
    try:
        items = match_finite_set(decode_program(e))
    except OverflowError:
        items = None
    return FiniteCeSet(items) if items is not None else ProgramCeSet(e)


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class ComputableCeSequence:
    """V_i = W_{f(i)} for a total f."""

    selector: int

    def index(self, i: int, budget: int) -> int | None:
        return evaluate(self.selector, i, budget)

    def member(self, i: int, budget: int) -> CeSet | None:
        e = self.index(i, budget)
        return None if e is None else ce_set(e)


@dataclass(frozen=True)
class StrongFiniteSequence:
    """V_i = D_{h(i)} for a total h."""

    selector: int

    def member(self, i: int, budget: int) -> frozenset[int] | None:
        v = evaluate(self.selector, i, budget)
        return None if v is None else dn_decode(v)


# ---------------------------------------------------------------------------
# normalizing functions


def intersection_sigma(items: Iterable[int]) -> int:
    """sigma with W_{sigma(n)} = W_n intersected with a fixed finite set."""
    items = sorted(set(items))
    a = Asm()
    a.copy(1, 9)
    a.native(2, 9, "fst")
    a.native(3, 9, "snd")
    for c in items:
        a.const(4, c)
        a.jeq(3, 4, "found")
    a.hang()
    a.label("found")
    a.native(2, 3, "eval")
    a.copy(3, 1)
    inter = a.index()
    s = Asm()
    s.copy(1, 3)
    s.const(1, inter)
    s.native(1, 3, "smn")
    return s.index()


def discrete_sigma(members: Sequence[Iterable[int]], supports: Sequence[Iterable[int]]) -> int:
    """sigma for a family of finite sets separated by the given supports.

    Searches stages t for the first support F_i with F_i inside W^t_n and
    returns the canonical index of the member containing F_i.
    """
    members = [frozenset(m) for m in members]
    targets = []
    for f in supports:
        f = frozenset(f)
        owners = [m for m in members if f <= m]
        if len(owners) != 1:
            raise ValueError(f"support {sorted(f)} does not single out a member")
        targets.append((sorted(f), finite_set_index(owners[0])))
    a = Asm()
    a.copy(1, 2)
    a.zero(3)
    a.zero(6)
    a.label("stage")
    for i, (f, target) in enumerate(targets):
        for k in f:
            # R5 := pair(n, t), then bounded run on k
            a.copy(2, 5)
            a.native(5, 3, "pair")
            a.const(7, k)
            a.native(5, 7, "bounded")
            a.jeq(5, 6, f"miss{i}")
        a.const(1, target)
        a.jump("end")
        a.label(f"miss{i}")
    a.succ(3)
    a.jump("stage")
    return a.index()


def constant_sigma(index: int) -> int:
    return const_index(index)


def h0_from_sigma(sigma: int) -> int:
    """Total h0 with im(h0) = dom(sigma), by dovetailing (input, steps) pairs.

    h0(pair(i, s)) = i when sigma halts on i within s steps, otherwise the
    first dovetailed hit.  Diverges everywhere when dom(sigma) is empty.
    """
    a = Asm()
    a.copy(1, 9)
    a.native(2, 9, "fst")
    a.native(3, 9, "snd")
    a.const(4, sigma)
    a.native(4, 3, "pair")
    a.native(4, 2, "clocked")
    a.zero(5)
    a.jeq(4, 5, "search")
    a.copy(2, 1)
    a.jump("end")
    a.label("search")
    a.zero(6)
    a.label("next")
    a.native(7, 6, "fst")
    a.native(8, 6, "snd")
    a.const(4, sigma)
    a.native(4, 8, "pair")
    a.native(4, 7, "clocked")
    a.jeq(4, 5, "miss")
    a.copy(7, 1)
    a.jump("end")
    a.label("miss")
    a.succ(6)
    a.jump("next")
    return a.index()


def _compose(first: int, second: int) -> int:
    """Index of x |-> phi_second(phi_first(x))."""
    a = Asm()
    a.const(2, first)
    a.native(2, 1, "eval")
    a.const(1, second)
    a.native(1, 2, "eval")
    return a.index()


# ---------------------------------------------------------------------------
# wn-families


@dataclass
class WnFamily:
    """A wn-family given by its normalizer sigma (and optionally h0).

    members, when present, lists the family explicitly; each member only
    needs to support ``in`` so infinite members can be given as predicates.
    """

    sigma: int
    members: tuple | None = None
    h0: int | None = None
    name: str = ""
    supports: tuple | None = None

    def __post_init__(self) -> None:
        if self.h0 is None:
            self.h0 = h0_from_sigma(self.sigma)
        if self.members is not None:
            self.members = tuple(self.members)

    @property
    def explicit(self) -> bool:
        return self.members is not None

    def match(self, observed: frozenset[int], bound: int) -> int | None:
        """Position of the explicit member equal to observed below bound."""
        assert self.members is not None
        for i, m in enumerate(self.members):
            if below(m, bound) == observed:
                return i
        return None


@dataclass
class Numbering:
    """The standard principal numbering n |-> W_{sigma(h0(n))}."""

    family: WnFamily
    program: int = field(init=False)

    def __post_init__(self) -> None:
        self.program = _compose(self.family.h0, self.family.sigma)

    def index(self, n: int, budget: int) -> int | None:
        return evaluate(self.program, n, budget)

    def stage(self, n: int, s: int) -> frozenset[int]:
        e = self.index(n, s)
        return frozenset() if e is None else ce_set(e).stage(s)

    def observe(self, n: int, bound: int, budget: int) -> frozenset[int] | None:
        e = self.index(n, budget)
        return None if e is None else observe(e, bound, budget)

    def member_of(self, n: int, bound: int, budget: int) -> int | None:
        seen = self.observe(n, bound, budget)
        return None if seen is None else self.family.match(seen, bound)

    def reduce_index(self, k: int, budget: int) -> int | None:
        """Some n with h0(n) = k, for k in dom(sigma)."""
        r = run_clocked(self.family.sigma, k, budget)
        return pair(k, r.steps) if isinstance(r, Halted) else None

    def reduction(self, seq: ComputableCeSequence) -> int:
        """Index of r with seq(i) = gamma(r(i)), built by s-m-n."""
        a = Asm()
        a.copy(1, 9)
        a.native(2, 9, "fst")      # f
        a.native(3, 9, "snd")      # i
        a.native(2, 3, "eval")     # y = f(i)
        a.zero(4)
        a.zero(6)
        a.label("try")
        a.const(5, self.family.sigma)
        a.native(5, 4, "pair")
        a.native(5, 2, "clocked")
        a.jeq(5, 6, "more")
        a.copy(2, 1)
        a.native(1, 4, "pair")
        a.jump("end")
        a.label("more")
        a.succ(4)
        a.jump("try")
        return smn(a.index(), seq.selector)

    def surjectivity(self, bound: int, budget: int, limit: int = 2_000) -> Verdict:
        """Name every explicit member: scan n = 0..limit, then fall back to
        n = reduce_index(k) for a canonical index k of each finite member."""
        members = self.family.members
        assert members is not None
        hit: dict[int, int] = {}
        for n in range(limit + 1):
            m = self.member_of(n, bound, budget)
            if m is not None and m not in hit:
                hit[m] = n
                if len(hit) == len(members):
                    break
        for i, member in enumerate(members):
            if i in hit or not isinstance(member, (set, frozenset)):
                continue
            n = self.reduce_index(finite_set_index(member), budget)
            if n is not None and self.member_of(n, bound, budget) == i:
                hit[i] = n
        missing = [i for i in range(len(members)) if i not in hit]
        if missing:
            return Verdict("principal_numbering.surjective", Status.UNKNOWN,
                           witness={"missing": missing, "searched": limit, "bound": bound},
                           budget=budget)
        return Verdict("principal_numbering.surjective", Status.VERIFIED,
                       witness={"first_index": hit, "bound": bound},
                       budget=budget, saturation_stage=max(hit.values()))


def principal_numbering(family: WnFamily) -> Numbering:
    return Numbering(family)


def wn_check(family: WnFamily, candidates: Iterable[int], budget: int, bound: int) -> Verdict:
    """Check both wn conditions for each candidate index below bound.

    Verified: sigma(n) halted and W_{sigma(n)} equals a member below bound.
    Refuted (explicit tier only): the observed sets contradict a condition.
    """
    rows = []
    for n in candidates:
        s = evaluate(family.sigma, n, budget)
        seen_n = observe(n, bound, budget)
        row: dict = {"candidate": n}
        own = family.match(seen_n, bound) if family.explicit else None
        if s is None:
            row["status"] = Status.UNKNOWN.value
            row["reason"] = "sigma did not halt within budget"
        else:
            seen_s = observe(s, bound, budget)
            row["sigma"] = s
            row["W_sigma"] = sorted(seen_s)
            if family.explicit:
                hit = family.match(seen_s, bound)
                if hit is None:
                    row["status"] = Status.REFUTED.value
                    row["reason"] = "W_sigma(n) matches no member"
                elif own is not None and seen_s != seen_n:
                    row["status"] = Status.REFUTED.value
                    row["reason"] = "W_n is a member but W_sigma(n) differs"
                else:
                    row["status"] = Status.VERIFIED.value
                    row["member"] = hit
            else:
                row["status"] = Status.VERIFIED.value
        rows.append(row)
    statuses = {r["status"] for r in rows}
    if Status.REFUTED.value in statuses:
        status = Status.REFUTED
    elif Status.UNKNOWN.value in statuses:
        status = Status.UNKNOWN
    else:
        status = Status.VERIFIED
    return Verdict("wn_check", status, witness={"bound": bound, "candidates": rows}, budget=budget)


# ---------------------------------------------------------------------------
# index sets


class _StageSource(Protocol):
    def stage(self, n: int, s: int) -> frozenset[int]: ...


class IndexSetEnumerator(CeSet):
    """Enumerates {n : gamma(n) meets V} by dovetailing both presentations."""

    def __init__(self, numbering: _StageSource, basis_indices: CeSet) -> None:
        self.numbering = numbering
        self.basis_indices = basis_indices

    def accepts(self, n: int, s: int) -> bool:
        v = self.basis_indices.stage(s)
        return bool(v) and bool(v & self.numbering.stage(n, s))

    def stage(self, s: int) -> frozenset[int]:
        return frozenset(n for n in range(s + 1) if self.accepts(n, s))


def index_set_enumerator(numbering: _StageSource, basis_indices: CeSet) -> IndexSetEnumerator:
    return IndexSetEnumerator(numbering, basis_indices)


# ---------------------------------------------------------------------------
# effective discreteness and positivity


def effective_discreteness_check(members: Sequence[Iterable[int]], bound: int) -> Verdict:
    """Search supports F_i inside {0..bound} that cover and separate the family."""
    fam = [frozenset(m) for m in members]
    universe = frozenset(range(bound + 1))
    supports = []
    for i, a in enumerate(fam):
        pool = sorted(a & universe)
        found = None
        for size in range(len(pool) + 1):
            for f in itertools.combinations(pool, size):
                f = frozenset(f)
                if all(b == a or not f <= b for b in fam):
                    found = f
                    break
            if found is not None:
                break
        if found is None:
            absolute = a <= universe
            return Verdict("effective_discreteness", Status.REFUTED,
                           witness={"member": i, "set": a, "absolute": absolute,
                                    "bound": bound})
        supports.append(found)
    table = {i: dn_encode(f) for i, f in enumerate(supports)}
    selector = lookup_index(table, table[len(supports) - 1] if supports else 0)
    return Verdict("effective_discreteness", Status.VERIFIED,
                   witness={"supports": supports, "selector": selector,
                            "sequence": StrongFiniteSequence(selector)})


def positive_witness(numbering: Numbering, supports: Sequence[Iterable[int]]) -> int:
    """Semi-decider for gamma(n) = gamma(m) from separating supports.

    Accepts pair(n, m) when n = m or some support lies inside both sets.
    Sound whenever each support is contained in a single member.
    """
    a = Asm()
    a.copy(1, 9)
    a.native(2, 9, "fst")
    a.native(3, 9, "snd")
    a.jeq(2, 3, "end")
    a.const(4, numbering.program)
    a.native(4, 2, "eval")
    a.copy(4, 2)
    a.const(4, numbering.program)
    a.native(4, 3, "eval")
    a.copy(4, 3)
    a.zero(5)          # stage t
    a.zero(6)
    a.label("stage")
    for i, f in enumerate(supports):
        for k in sorted(set(f)):
            for reg in (2, 3):
                a.copy(reg, 7)
                a.native(7, 5, "pair")
                a.const(8, k)
                a.native(7, 8, "bounded")
                a.jeq(7, 6, f"miss{i}")
        a.jump("end")
        a.label(f"miss{i}")
    a.succ(5)
    a.jump("stage")
    return a.index()


def positivity_check(numbering: Numbering, witness: int, samples: Sequence[int],
                     bound: int, budget: int) -> Verdict:
    """Soundness of the equality witness on a sample grid; completeness where observed."""
    names = {n: numbering.member_of(n, bound, budget) for n in samples}
    unsound, missed = [], []
    for n in samples:
        for m in samples:
            accepted = evaluate(witness, pair(n, m), budget) is not None
            same = names[n] is not None and names[n] == names[m]
            known = names[n] is not None and names[m] is not None
            if accepted and known and not same:
                unsound.append((n, m))
            elif same and not accepted:
                missed.append((n, m))
    if unsound:
        return Verdict("positivity", Status.REFUTED,
                       witness={"accepted_unequal": unsound[:10], "bound": bound}, budget=budget)
    if missed or any(v is None for v in names.values()):
        return Verdict("positivity", Status.UNKNOWN,
                       witness={"sound": True, "not_accepted": missed[:10],
                                "unresolved": sorted(n for n, v in names.items() if v is None),
                                "bound": bound},
                       budget=budget)
    return Verdict("positivity", Status.VERIFIED, witness={"grid": len(samples), "bound": bound},
                   budget=budget)


# ---------------------------------------------------------------------------
# the classical theorem on an explicit family


def classical_rice_shapiro_oracle(k: Iterable[Iterable[int]],
                                  family: Sequence[Iterable[int]]) -> Verdict:
    """Decide whether k is generated by finite supports inside the family.

    On an explicit family of finite sets this is upward closure within the
    family; the generators returned are the minimal members of k.
    """
    fam = [frozenset(m) for m in family]
    pos = {m: i for i, m in enumerate(fam)}
    mask = 0
    for m in k:
        mask |= 1 << pos[frozenset(m)]
    ups = _superset_masks(tuple(fam))
    for i, a in enumerate(fam):
        if mask >> i & 1:
            bad = ups[i] & ~mask
            if bad:
                j = (bad & -bad).bit_length() - 1
                return Verdict("classical_rice_shapiro", Status.REFUTED,
                               witness={"in_k": a, "superset_not_in_k": fam[j]})
    gens = [a for i, a in enumerate(fam)
            if mask >> i & 1 and not any(b < a for j, b in enumerate(fam) if mask >> j & 1)]
    return Verdict("classical_rice_shapiro", Status.VERIFIED,
                   witness={"generators": sorted(gens, key=lambda g: (len(g), sorted(g)))})


@lru_cache(maxsize=16)
def _superset_masks(fam: tuple[frozenset[int], ...]) -> list[int]:
    out = []
    for a in fam:
        m = 0
        for j, b in enumerate(fam):
            if a <= b:
                m |= 1 << j
        out.append(m)
    return out
