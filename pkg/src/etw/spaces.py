"""Effectively enumerable T0-spaces, modular witnesses, and the X_S / X_T constructions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

from .kernel import Asm, dn_decode, finite_set_index, lookup_index
from .numberings import CeSet, FiniteCeSet, Numbering, TruncatedCeSet, WnFamily, ce_set
from .trees import (
    Seq, Tree, delta_decode, delta_encode, path_codes, prefix_leq, sigma_T_limit, sigma_T_stage,
)
from .verdict import Status, Verdict

__all__ = [
    "Space", "EffOpenSet", "ModularWitness", "ee_space_check", "eff_open_denotation",
    "saturate", "OpenNumbering", "principal_open_numbering", "specialization_leq",
    "modular_check", "intersection_identity_check", "XTNumbering", "build_X_T",
    "XSConstruction", "build_X_S", "homeomorphism_check", "explicit_space", "gamma_star_of",
]

Point = Hashable


def saturate(v: CeSet | Iterable[int], stages: int) -> tuple[frozenset[int], int | None]:
    """Final stage of a presentation (following change points up to stages).

    Returns the set and the stage where it stopped changing, or None if it
    was still changing at the cap.
    """
    if not isinstance(v, CeSet):
        return frozenset(v), 0
    s = 0
    while True:
        t = v.next_change(s)
        if t is None:
            return v.stage(s), s
        if t > stages:
            return v.stage(stages), None
        s = t


@dataclass
class Space:
    """An explicit finite space: points, a finite table of basic opens and g.

    Basis indices missing from the table denote the empty set.  g(i, j, n)
    is consulted for n < g_width.
    """

    points: tuple
    basis: dict[int, frozenset]
    g: Callable[[int, int, int], int]
    g_width: int
    name: str = ""
    declared_nonempty: frozenset[int] | None = None
    meta: dict = field(default_factory=dict)

    def alpha(self, i: int) -> frozenset:
        return self.basis.get(i, frozenset())

    @property
    def indices(self) -> list[int]:
        return sorted(self.basis)

    def profile(self, x: Point) -> frozenset[int]:
        """A_x restricted to the tabulated indices."""
        return frozenset(i for i, b in self.basis.items() if x in b)

    def nonempty(self) -> frozenset[int]:
        return frozenset(i for i, b in self.basis.items() if b)


def explicit_space(points: Sequence[Point], opens: Sequence[Iterable[Point]], name: str = "") -> Space:
    """Space from a list of opens; index k+1 names opens[k], 0 is the empty open.

    Intersections are covered by every listed open inside them.
    """
    pts = tuple(points)
    basis = {0: frozenset()}
    for k, o in enumerate(opens):
        basis[k + 1] = frozenset(o)
    keys = sorted(basis)

    def g(i: int, j: int, n: int) -> int:
        inter = basis.get(i, frozenset()) & basis.get(j, frozenset())
        inside = [k for k in keys if basis[k] and basis[k] <= inter]
        return inside[n] if n < len(inside) else 0

    return Space(pts, basis, g, len(keys), name=name)


@dataclass(frozen=True)
class EffOpenSet:
    """The union of the basic opens indexed by a c.e. set."""

    index_set: Any  # CeSet or a finite iterable of indices

    def indices(self, stages: int) -> tuple[frozenset[int], int | None]:
        return saturate(self.index_set, stages)


def eff_open_denotation(space: Space, o: EffOpenSet | Iterable[int] | CeSet,
                        stages: int = 10**3) -> frozenset:
    if not isinstance(o, EffOpenSet):
        o = EffOpenSet(o)
    idx, _ = o.indices(stages)
    out: set = set()
    for i in idx:
        out |= space.alpha(i)
    return frozenset(out)


def ee_space_check(space: Space) -> Verdict:
    """Both clauses of effective enumerability, plus T0, on the explicit table."""
    keys = space.indices
    probe = keys + [max(keys, default=0) + 1]  # one index outside the table
    last = 0
    for i in probe:
        for j in probe:
            want = space.alpha(i) & space.alpha(j)
            got: set = set()
            for n in range(space.g_width):
                extra = space.alpha(space.g(i, j, n)) - got
                if extra:
                    got |= extra
                    last = max(last, n)
            if frozenset(got) != want:
                return Verdict("ee_space", Status.REFUTED,
                               witness={"pair": [i, j], "intersection": sorted_points(want),
                                        "union_of_g": sorted_points(got)},
                               saturation_stage=last)
    if space.declared_nonempty is not None and space.declared_nonempty != space.nonempty():
        return Verdict("ee_space", Status.REFUTED,
                       witness={"declared_nonempty": space.declared_nonempty,
                                "nonempty": space.nonempty()})
    seen: dict[frozenset, Point] = {}
    for x in space.points:
        p = space.profile(x)
        if p in seen:
            return Verdict("ee_space", Status.REFUTED,
                           witness={"not_T0": sorted_points([seen[p], x])})
        seen[p] = x
    uncovered = [x for x in space.points if not space.profile(x)]
    witness = {"uncovered_points": sorted_points(uncovered)} if uncovered else None
    return Verdict("ee_space", Status.VERIFIED, witness=witness, saturation_stage=last)


def sorted_points(xs: Iterable[Point]) -> list:
    return sorted(xs, key=lambda x: (str(type(x)), repr(x)))


# ---------------------------------------------------------------------------
# effectively open sets and their principal numbering


@dataclass
class OpenNumbering:
    """n |-> union of alpha(k) over k in W_n."""

    space: Space
    stages: int = 10**3

    def denote(self, n: int) -> frozenset:
        return eff_open_denotation(self.space, ce_set(n), self.stages)

    def reduce(self, selector: int) -> int:
        """A computable sequence O_i = union over W_{f(i)} reduces by f itself."""
        return selector


def principal_open_numbering(space: Space, stages: int = 10**3) -> OpenNumbering:
    return OpenNumbering(space, stages)


def specialization_leq(space: Space, x: Point, y: Point) -> bool:
    return space.profile(x) <= space.profile(y)


# ---------------------------------------------------------------------------
# modular witnesses


@dataclass
class ModularWitness:
    """b_n and the index sets of O_n for n below the table length."""

    b: tuple
    o: tuple  # each entry: frozenset of basis indices or CeSet
    b_selector: int | None = None
    o_selector: int | None = None

    def __len__(self) -> int:
        return len(self.b)


def modular_check(space: Space, w: ModularWitness, stages: int = 10**3) -> Verdict:
    """b_n below every point of O_n, and alpha(m) = U{O_i : b_i in alpha(m)}."""
    opens = [eff_open_denotation(space, o, stages) for o in w.o]
    for n, (b, o) in enumerate(zip(w.b, opens)):
        for y in sorted_points(o):
            if not specialization_leq(space, b, y):
                return Verdict("modular", Status.REFUTED,
                               witness={"clause": "b_n <= O_n", "n": n, "b_n": b, "point": y})
    for m in space.indices:
        a = space.alpha(m)
        cover: set = set()
        for b, o in zip(w.b, opens):
            if b in a:
                cover |= o
        if frozenset(cover) != a:
            return Verdict("modular", Status.REFUTED,
                           witness={"clause": "covering", "m": m, "alpha": sorted_points(a),
                                    "cover": sorted_points(cover)})
    return Verdict("modular", Status.VERIFIED, witness={"length": len(w)})


def intersection_identity_check(space: Space, w: ModularWitness, v: Iterable[int],
                                stages: int = 10**3) -> Verdict:
    v = sorted(set(v))
    # the empty intersection is taken over the points some basic open covers
    lhs = frozenset(x for x in space.points if space.profile(x))
    for i in v:
        lhs &= space.alpha(i)
    rhs: set = set()
    for b, o in zip(w.b, w.o):
        if b in lhs:
            rhs |= eff_open_denotation(space, o, stages)
    if lhs != frozenset(rhs):
        return Verdict("intersection_identity", Status.REFUTED,
                       witness={"V": v, "intersection": sorted_points(lhs),
                                "union": sorted_points(rhs)})
    witness: dict = {"V": v}
    if not v:
        uncovered = [x for x in space.points if not space.profile(x)]
        if uncovered:
            witness["uncovered_points"] = sorted_points(uncovered)
    return Verdict("intersection_identity", Status.VERIFIED, witness=witness)


# ---------------------------------------------------------------------------
# X_T


@dataclass
class XTNumbering:
    """gamma(k) = W_{sigma_T(k)}: k is a program index or a CeSet standing for W_k."""

    tree: Tree
    max_stage: int = 10**3
    # keyed by int index or by the CeSet object (identity hash); holding the
    # object in the key keeps its id from being reused
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def _key(self, k: int | CeSet) -> tuple:
        return ("i", k) if isinstance(k, int) else ("c", k)

    def stage(self, k: int | CeSet, s: int) -> frozenset[int]:
        key = (self._key(k), "stage", s)
        if key not in self._memo:
            self._memo[key] = sigma_T_stage(self.tree, k, s)
        return self._memo[key]

    def limit(self, k: int | CeSet) -> tuple[frozenset[int], int | None]:
        key = (self._key(k), "limit")
        if key not in self._memo:
            c = k if isinstance(k, CeSet) else ce_set(k)
            # presentations that provably settle are read to the end
            horizon = math.inf if isinstance(c, (FiniteCeSet, TruncatedCeSet)) else self.max_stage
            self._memo[key] = sigma_T_limit(self.tree, c, horizon)
        return self._memo[key]

    def point(self, k: int | CeSet) -> Seq | None:
        """The vertex x with gamma(k) = delta^{-1}(p_x); None for the empty output."""
        out, _ = self.limit(k)
        if not out:
            return None
        return max((delta_decode(c) for c in out), key=len)


def build_X_T(tree: Tree) -> tuple[Space, ModularWitness]:
    """Points are vertices (standing for p_x); alpha(i) = A_{delta(i)}."""
    assert tree.vertices is not None
    verts = tree.sorted_vertices()
    codes = [delta_encode(x) for x in verts]
    basis: dict[int, frozenset] = {}
    for x, c in zip(verts, codes):
        basis[c] = frozenset(y for y in verts if prefix_leq(x, y))
    empty = 0
    while empty in basis:
        empty += 1
    basis[empty] = frozenset()

    def g(i: int, j: int, n: int) -> int:
        if i not in basis or j not in basis or not basis[i] or not basis[j]:
            return empty
        u, v = delta_decode(i), delta_decode(j)
        if prefix_leq(u, v):
            return j
        if prefix_leq(v, u):
            return i
        return empty

    space = Space(tuple(verts), basis, g, 1, name=tree.name or "X_T",
                  meta={"tree": tree, "empty_index": empty, "numbering": XTNumbering(tree)})
    # c_1 < c_2 < ... enumerates delta^{-1}(T)
    b = tuple(verts)
    o = tuple(frozenset([c]) for c in codes)
    b_sel = lookup_index({n: finite_set_index(path_codes(x)) for n, x in enumerate(verts)},
                         finite_set_index(path_codes(verts[0])))
    o_sel = lookup_index({n: finite_set_index([c]) for n, c in enumerate(codes)},
                         finite_set_index([codes[0]]))
    return space, ModularWitness(b, o, b_sel, o_sel)


# ---------------------------------------------------------------------------
# X_S


def _union_of_dn_program() -> int:
    """G with phi_G(pair(m, x)) halting iff x lies in some D_n, n in W_m."""
    a = Asm()
    a.native(2, 1, "fst")       # m
    a.native(3, 1, "snd")       # x
    a.zero(4)                   # search counter c = pair(n, t)
    a.zero(9)
    a.const(10, 1)
    a.label("next")
    a.native(5, 4, "fst")       # n
    a.native(6, 4, "snd")       # t
    a.copy(2, 7)
    a.native(7, 6, "pair")
    a.native(7, 5, "bounded")   # n in W_m^t ?
    a.jeq(7, 9, "miss")
    a.copy(5, 8)
    a.native(8, 3, "bit")
    a.jeq(8, 10, "end")
    a.label("miss")
    a.succ(4)
    a.jump("next")
    return a.index()


def _subsets_program() -> int:
    """SUB with phi_SUB(pair(k, n)) halting iff D_n is inside W_k."""
    a = Asm()
    a.native(2, 1, "fst")       # k
    a.native(3, 1, "snd")       # n
    a.zero(4)                   # x
    a.const(10, 1)
    a.label("loop")
    a.copy(3, 5)
    a.native(5, 4, "bit")
    a.jeq(5, 10, "need")
    a.jump("step")
    a.label("need")
    a.copy(2, 6)
    a.native(6, 4, "eval")
    a.label("step")
    a.jeq(4, 3, "end")
    a.succ(4)
    a.jump("loop")
    return a.index()


def _sigma_star(sigma: int) -> int:
    """m |-> index of {n : D_n inside W_{sigma(g(m))}}."""
    a = Asm()
    a.const(2, _union_of_dn_program())
    a.native(2, 1, "smn")       # g(m)
    a.const(3, sigma)
    a.native(3, 2, "eval")      # sigma(g(m))
    a.const(1, _subsets_program())
    a.native(1, 3, "smn")
    return a.index()


@dataclass
class XSConstruction:
    space: Space
    numbering: Numbering
    representatives: dict[int, int]     # point (class representative) -> member position
    sigma_star: int
    g_index: int
    bound: int

    def gamma_star(self, i: int) -> frozenset[int]:
        """A-set of the point [i]."""
        return gamma_star_of(self.f(i))

    def f(self, point: int) -> frozenset:
        return frozenset(self.numbering.family.members[self.representatives[point]])

    def image_family(self) -> WnFamily:
        members = [gamma_star_of(m) for m in self.numbering.family.members]
        return WnFamily(self.sigma_star, members=members, name="X_S image")


def gamma_star_of(member: Iterable[int]) -> frozenset[int]:
    """{n : D_n inside member} for a finite member."""
    items = sorted(set(member))
    out = set()
    for r in range(len(items) + 1):
        for sub in itertools.combinations(items, r):
            out.add(sum(1 << x for x in sub))
    return frozenset(out)


def build_X_S(numbering: Numbering, bound: int = 8, budget: int = 10**4) -> XSConstruction:
    """Classes of the numbering as points; alpha_S(n) = {[i] : D_n inside gamma(i)}.

    The classes are materialized from one representative per explicit member
    (found by the surjectivity search); the basis is tabulated for n < 2^bound.
    """
    fam = numbering.family
    assert fam.members is not None
    surj = numbering.surjectivity(bound, budget)
    if not surj.verified:
        raise ValueError(f"could not name every member: {surj.witness}")
    reps = {int(n): int(pos) for pos, n in surj.witness["first_index"].items()}
    seen = {i: numbering.observe(i, bound, budget) for i in reps}
    points = tuple(sorted(reps))
    basis = {}
    for n in range(1 << bound):
        d = dn_decode(n)
        basis[n] = frozenset(i for i in points if seen[i] is not None and d <= seen[i])

    def g(i: int, j: int, _n: int) -> int:
        return i | j

    space = Space(points, basis, g, 1, name=fam.name or "X_S",
                  meta={"observed": seen})
    g_index = _union_of_dn_program()
    return XSConstruction(space, numbering, reps, _sigma_star(fam.sigma), g_index, bound)


def homeomorphism_check(xs: XSConstruction, beta: Callable[[int], frozenset] | None = None) -> Verdict:
    """f([i]) = gamma(i) is a bijection onto the members carrying alpha_S(n) onto beta(n)."""
    members = [frozenset(m) for m in xs.numbering.family.members]
    images = {p: xs.f(p) for p in xs.space.points}
    if sorted(map(sorted, images.values())) != sorted(map(sorted, members)) \
            or len(set(images.values())) != len(images):
        return Verdict("homeomorphism", Status.REFUTED, witness={"not_bijective": images})
    if beta is None:
        def beta(n: int) -> frozenset:
            d = dn_decode(n)
            return frozenset(m for m in members if d <= m)
    for n in xs.space.indices:
        mapped = frozenset(images[p] for p in xs.space.alpha(n))
        want = beta(n)
        if mapped != want:
            return Verdict("homeomorphism", Status.REFUTED,
                           witness={"basis_index": n, "image": sorted(map(sorted, mapped)),
                                    "beta": sorted(map(sorted, want))})
    return Verdict("homeomorphism", Status.VERIFIED,
                   witness={"points": len(images), "basis_indices": len(xs.space.indices)})
