"""Finite domain fixtures, way-below approximations and the element numbering alpha_c."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .kernel import pair, unpair
from .numberings import CeSet, FiniteCeSet, ce_set
from .spaces import ModularWitness, Space
from .verdict import Status, Verdict

__all__ = [
    "DomainBasis", "explicit_domain", "WayBelowApprox", "transitive_presentation",
    "interpolate", "ElementApprox", "alpha_c", "scott_open", "domain_to_modular",
    "transitive_closure", "domain_fixtures", "NO_CANDIDATE", "alpha_c_check",
]

# h_e's "no candidate" marker; never compared with naturals
NO_CANDIDATE = None


def transitive_closure(rel: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    succ: dict[int, set[int]] = {}
    for a, b in rel:
        succ.setdefault(a, set()).add(b)
    out = set()
    for a in list(succ):
        stack = list(succ[a])
        seen: set[int] = set()
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(succ.get(b, ()))
        out.update((a, b) for b in seen)
    return frozenset(out)


@dataclass
class DomainBasis:
    """A finite poset with least element at index 0; way-below is taken as <=."""

    names: tuple[str, ...]
    leq_pairs: frozenset[tuple[int, int]]
    name: str = ""

    def __post_init__(self) -> None:
        n = len(self.names)
        rel = set(self.leq_pairs) | {(i, i) for i in range(n)}
        self.leq_pairs = transitive_closure(rel)
        for a, b in self.leq_pairs:
            if a != b and (b, a) in self.leq_pairs:
                raise ValueError(f"not antisymmetric: {self.names[a]} and {self.names[b]}")
        missing = [self.names[i] for i in range(n) if (0, i) not in self.leq_pairs]
        if missing:
            raise ValueError(f"index 0 ({self.names[0]}) is not least: {missing}")

    def __len__(self) -> int:
        return len(self.names)

    def leq(self, i: int, j: int) -> bool:
        return (i, j) in self.leq_pairs

    def way_below(self, i: int, j: int) -> bool:
        # every directed subset of a finite poset has a top element
        return self.leq(i, j)

    def approx(self, a: int) -> frozenset[int]:
        """{n : beta(n) << beta(a)}."""
        return frozenset(n for n in range(len(self)) if self.way_below(n, a))

    def raw_waybelow(self) -> FiniteCeSet:
        """The way-below relation as a c.e. set of pair codes."""
        return FiniteCeSet(pair(i, j) for i in range(len(self)) for j in range(len(self))
                           if self.way_below(i, j))


def explicit_domain(elements: Sequence[str], leq: Iterable[tuple[str, str]], name: str = "") -> DomainBasis:
    pos = {e: i for i, e in enumerate(elements)}
    return DomainBasis(tuple(elements), frozenset((pos[a], pos[b]) for a, b in leq), name)


def domain_fixtures() -> list[DomainBasis]:
    """Every finite poset fixture used by the tests and the acceptance run."""
    out = [
        explicit_domain(["bot"], [], "point"),
        explicit_domain(["bot", "a"], [("bot", "a")], "two-chain"),
        explicit_domain(["bot", "a", "b"], [("bot", "a"), ("a", "b")], "three-chain"),
        explicit_domain(["bot", "a", "b"], [("bot", "a"), ("bot", "b")], "flat-2"),
        explicit_domain(["bot", "a", "b", "top"],
                        [("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")], "diamond"),
        explicit_domain(["bot", "a", "b", "c"], [("bot", "a"), ("bot", "b"), ("bot", "c")], "flat-3"),
        explicit_domain(["bot", "a", "b", "c", "d"],
                        [("bot", "a"), ("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")], "lifted-diamond"),
        explicit_domain(["bot", "a", "b", "ab", "c", "top"],
                        [("bot", "a"), ("bot", "b"), ("a", "ab"), ("b", "ab"), ("bot", "c"),
                         ("ab", "top"), ("c", "top")], "six"),
        explicit_domain(["bot", "a", "b", "c", "d", "e"],
                        [("bot", "a"), ("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")], "six-chain"),
        explicit_domain(["bot", "a", "b", "x", "y", "z"],
                        [("bot", "a"), ("bot", "b"), ("a", "x"), ("b", "x"), ("a", "y"),
                         ("b", "y"), ("x", "z"), ("y", "z")], "crown"),
    ]
    return out


# ---------------------------------------------------------------------------
# stage approximations of way-below


@dataclass
class WayBelowApprox:
    """A_t = transitive closure of the raw stage, clamped to {0..t}^2."""

    raw: CeSet

    def stage(self, t: int) -> frozenset[tuple[int, int]]:
        pairs = [unpair(c) for c in self.raw.stage(t)]
        return transitive_closure((a, b) for a, b in pairs if a <= t and b <= t)

    def next_change(self, t: int) -> int | None:
        # clamping can also change the stage, up to the largest index seen
        if self.raw.next_change(t) is None and t >= self._clamp_horizon(t):
            return None
        return t + 1

    def _clamp_horizon(self, t: int) -> int:
        top = 0
        for c in self.raw.stage(t):
            a, b = unpair(c)
            top = max(top, a, b)
        return top


def transitive_presentation(raw: CeSet | int) -> WayBelowApprox:
    return WayBelowApprox(raw if isinstance(raw, CeSet) else ce_set(raw))


def interpolate(d: DomainBasis, m: Iterable[int], y: int) -> int:
    """Some basis x with M << x << y (least index wins)."""
    m = sorted(set(m))
    for k in m:
        if not d.way_below(k, y):
            raise ValueError(f"precondition fails: {d.names[k]} is not way below {d.names[y]}")
    for x in range(len(d)):
        if d.way_below(x, y) and all(d.way_below(k, x) for k in m):
            return x
    raise AssertionError("interpolation failed on a finite poset")  # pragma: no cover


# ---------------------------------------------------------------------------
# alpha_c


@dataclass
class ElementApprox:
    """g_e(s) and h_e(s) for s = 0..stages."""

    g: list[int] = field(default_factory=list)
    h: list[int | None] = field(default_factory=list)

    @property
    def value(self) -> int:
        return self.g[-1]

    @property
    def settled_at(self) -> int:
        """First stage from which g stays constant."""
        s = len(self.g) - 1
        while s > 0 and self.g[s - 1] == self.g[-1]:
            s -= 1
        return s


def alpha_c(d: DomainBasis, w: CeSet | int, stages: int,
            approx: WayBelowApprox | None = None, start: ElementApprox | None = None) -> ElementApprox:
    """Run the h_e / g_e recursion for W_e = w up to the given stage.

    ``start`` resumes from a previous run (its last stage is kept).
    """
    if not isinstance(w, CeSet):
        w = ce_set(w)
    a = approx or transitive_presentation(d.raw_waybelow())
    n_basis = len(d)
    out = ElementApprox(list(start.g), list(start.h)) if start else ElementApprox([0], [0])
    for s in range(len(out.g) - 1, stages):
        ws = sorted(x for x in w.stage(s + 1) if x < n_basis)
        rel = a.stage(s + 1)
        g = out.g[s]
        k = next((n for n in ws if (n, g) not in rel), NO_CANDIDATE)
        out.h.append(k)
        if k is NO_CANDIDATE:
            out.g.append(g)
            continue
        b = next((x for x in ws if x > 0 and (g, x) in rel and (k, x) in rel), None)
        out.g.append(g if b is None else b)
    return out


def scott_open(d: DomainBasis, n: int) -> frozenset[int]:
    """U_n = {x : beta(n) << x}."""
    return frozenset(x for x in range(len(d)) if d.way_below(n, x))


def domain_to_modular(d: DomainBasis) -> tuple[Space, ModularWitness]:
    """alpha(0) is empty and alpha(n) = U_n; b_n = beta(n), O_n = alpha(n)."""
    points = tuple(range(len(d)))
    basis = {0: frozenset()}
    for n in range(1, len(d)):
        basis[n] = scott_open(d, n)

    def g(i: int, j: int, n: int) -> int:
        if i == 0 or j == 0 or i not in basis or j not in basis:
            return 0
        common = [k for k in range(1, len(d)) if d.way_below(i, k) and d.way_below(j, k)]
        return common[n] if n < len(common) else 0

    space = Space(points, basis, g, len(d), name=d.name or "domain", meta={"domain": d})
    w = ModularWitness(points, tuple(frozenset([n]) for n in points))
    return space, w


def alpha_c_check(d: DomainBasis, stages: int = 200) -> Verdict:
    """alpha_c of each approx set returns its element, with the chain invariant."""
    approx = transitive_presentation(d.raw_waybelow())
    limit = approx.stage(stages)
    rows = []
    for a in range(len(d)):
        run = alpha_c(d, FiniteCeSet(d.approx(a)), stages, approx)
        for s in range(stages):
            x, y = run.g[s], run.g[s + 1]
            if x != y and (x, y) not in limit:
                return Verdict("alpha_c", Status.REFUTED,
                               witness={"element": d.names[a], "stage": s, "chain": [x, y]})
        if run.value != a:
            return Verdict("alpha_c", Status.REFUTED,
                           witness={"element": d.names[a], "limit": d.names[run.value]})
        rows.append({"element": d.names[a], "settled_at": run.settled_at})
    return Verdict("alpha_c", Status.VERIFIED, witness=rows,
                   saturation_stage=max(r["settled_at"] for r in rows))

