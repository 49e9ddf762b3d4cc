"""Finite sequences, tree orders, partial paths and the normalizer for S_T."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key, lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from .kernel import Asm, decode_seq, encode_seq
from .numberings import CeSet, ce_set, evaluate

__all__ = [
    "Seq", "delta_encode", "delta_decode", "prefix_leq", "lex_leq", "kb_leq", "kb_key",
    "Tree", "explicit_tree", "path_of_vertex", "path_codes", "SigmaTState", "sigma_T_step",
    "sigma_T_advance", "sigma_T_stage", "sigma_T_limit", "iter_vertices", "s_T_members", "inseparable_tree", "all_trees",
    "partial_paths_bruteforce", "parse_seq", "format_seq",
]

Seq = tuple[int, ...]


@lru_cache(maxsize=1 << 16)
def delta_encode(x: Seq) -> int:
    """delta^{-1}: length-prefixed iterated Cantor pairing, () -> 0."""
    return encode_seq(x)


@lru_cache(maxsize=1 << 16)
def delta_decode(n: int) -> Seq:
    return decode_seq(n)


def prefix_leq(x: Seq, y: Seq) -> bool:
    """x is an initial segment of y."""
    return len(x) <= len(y) and y[: len(x)] == x


def _first_difference(x: Seq, y: Seq) -> int | None:
    for i, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return i
    return None


def lex_leq(x: Seq, y: Seq) -> bool:
    """x is a prefix of y, or x is smaller at the first difference."""
    if prefix_leq(x, y):
        return True
    i = _first_difference(x, y)
    return i is not None and x[i] < y[i]


def kb_leq(x: Seq, y: Seq) -> bool:
    """Kleene-Brouwer: x extends y, or x is smaller at the first difference."""
    if prefix_leq(y, x):
        return True
    i = _first_difference(x, y)
    return i is not None and x[i] < y[i]


def _kb_cmp(x: Seq, y: Seq) -> int:
    if x == y:
        return 0
    return -1 if kb_leq(x, y) else 1


kb_key = cmp_to_key(_kb_cmp)


def parse_seq(text: str) -> Seq:
    """Parse ``(a b c)``; commas are accepted as separators too."""
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"sequence must be parenthesized: {text!r}")
    return tuple(int(t) for t in body[1:-1].replace(",", " ").split())


def format_seq(x: Seq) -> str:
    return "(" + " ".join(map(str, x)) + ")"


# ---------------------------------------------------------------------------
# trees


@dataclass(eq=False)
class Tree:
    """A tree given by explicit vertices, a membership program, or a predicate.

    ``alphabet`` bounds the entries used when listing vertices of a symbolic
    tree up to some depth; explicit trees ignore it.
    """

    vertices: frozenset | None = None
    program: int | None = None
    predicate: Callable[[Seq], bool] | None = None
    alphabet: tuple[int, ...] = (0, 1)
    name: str = ""
    budget: int = 10**6
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def explicit(self) -> bool:
        return self.vertices is not None

    def __contains__(self, x: Seq) -> bool:
        x = tuple(x)
        if self.vertices is not None:
            return x in self.vertices
        hit = self._cache.get(x)
        if hit is None:
            if self.predicate is not None:
                hit = bool(self.predicate(x))
            else:
                v = evaluate(self.program, delta_encode(x), self.budget)
                if v is None:
                    raise RuntimeError(f"membership program did not halt on {format_seq(x)}")
                hit = v != 0
            self._cache[x] = hit
        return hit

    def truncate(self, depth: int) -> "Tree":
        """The explicit tree of vertices of length <= depth."""
        out = {()}
        frontier = [()]
        for _ in range(depth):
            nxt = []
            for x in frontier:
                for a in self.alphabet:
                    y = x + (a,)
                    if y in self:
                        out.add(y)
                        nxt.append(y)
            frontier = nxt
        return explicit_tree(out, name=f"{self.name}|{depth}" if self.name else "")

    def sorted_vertices(self) -> list[Seq]:
        """Vertices in increasing order of their delta codes."""
        assert self.vertices is not None
        return sorted(self.vertices, key=delta_encode)

    def check(self) -> list[str]:
        """Problems with downward closure or the root (explicit tier)."""
        assert self.vertices is not None
        problems = []
        if () not in self.vertices:
            problems.append("root () missing")
        for x in self.vertices:
            if x and x[:-1] not in self.vertices:
                problems.append(f"{format_seq(x)} has no parent")
        return sorted(problems)


def explicit_tree(vertices: Iterable[Sequence[int]], name: str = "") -> Tree:
    vs = frozenset(tuple(v) for v in vertices)
    t = Tree(vertices=vs, name=name)
    bad = t.check()
    if bad:
        raise ValueError("not a tree: " + "; ".join(bad))
    return t


def all_trees(max_vertices: int, alphabet: Sequence[int] = (0, 1, 2)) -> list[Tree]:
    """Every tree with at most max_vertices vertices over alphabet."""
    level = {frozenset([()])}
    found = set(level)
    for _ in range(max_vertices - 1):
        nxt = set()
        for t in level:
            for x in t:
                for a in alphabet:
                    y = x + (a,)
                    if y not in t:
                        nxt.add(t | {y})
        found |= nxt
        level = nxt
    ordered = sorted(found, key=lambda t: (len(t), sorted(delta_encode(x) for x in t)))
    return [Tree(vertices=t) for t in ordered]


# ---------------------------------------------------------------------------
# partial paths


def path_of_vertex(tree: Tree, x: Seq) -> frozenset[Seq]:
    """p_x: all prefixes of x."""
    x = tuple(x)
    if x not in tree:
        raise ValueError(f"{format_seq(x)} is not a vertex")
    return frozenset(x[:i] for i in range(len(x) + 1))


def path_codes(x: Seq) -> frozenset[int]:
    """delta codes of p_x."""
    return frozenset(delta_encode(x[:i]) for i in range(len(x) + 1))


def s_T_members(tree: Tree) -> list[frozenset[int]]:
    """The delta images of all nonempty finite partial paths."""
    return [path_codes(x) for x in tree.sorted_vertices()]


def partial_paths_bruteforce(tree: Tree) -> list[frozenset[Seq]]:
    """Nonempty finite partial paths found by checking every vertex subset."""
    vs = tree.sorted_vertices()
    out = []
    for mask in range(1, 1 << len(vs)):
        p = [vs[i] for i in range(len(vs)) if mask >> i & 1]
        ps = set(p)
        down = all(x[:k] in ps for x in p for k in range(len(x)))
        linear = all(prefix_leq(a, b) or prefix_leq(b, a) for a in p for b in p)
        if down and linear:
            out.append(frozenset(p))
    return out


# ---------------------------------------------------------------------------
# the normalizer for S_T, stage by stage


@dataclass
class SigmaTState:
    """Progress of the stage construction: last stage processed and the chain tip."""

    stage: int = 0
    tip: Seq | None = None

    def output(self) -> frozenset[int]:
        return frozenset() if self.tip is None else path_codes(self.tip)


def _candidates(tree: Tree, seen: frozenset[int], tip: Seq | None) -> list[Seq]:
    out = []
    for b in seen:
        x = delta_decode(b)
        if tip is not None and not prefix_leq(tip, x):
            continue
        if x not in tree:
            continue
        if all(delta_encode(x[:i]) in seen for i in range(len(x))):
            out.append(x)
    return out


def sigma_T_step(tree: Tree, seen: frozenset[int], tip: Seq | None) -> Seq | None:
    """One stage: the KB-least vertex b coded in seen whose prefixes are all
    coded in seen and which extends the current tip."""
    cands = _candidates(tree, seen, tip)
    if not cands:
        return tip
    return min(cands, key=kb_key)


def _as_ce(n: int | CeSet) -> CeSet:
    return n if isinstance(n, CeSet) else ce_set(n)


def sigma_T_advance(tree: Tree, wn: CeSet, state: SigmaTState, s: int) -> SigmaTState:
    """Advance state to stage s.  Stage t+1 reads W_n at stage t; between
    changes of W_n one step reaches a fixpoint, so only change points are
    visited."""
    tip = state.tip
    t = state.stage
    if t >= s:
        return SigmaTState(t, tip)
    # the stage that produced the current state read W^{t-1}; reread W^t
    read = t
    while read is not None and read <= s - 1:
        tip = sigma_T_step(tree, wn.stage(read), tip)
        read = wn.next_change(read)
    return SigmaTState(s, tip)


def sigma_T_stage(tree: Tree, n: int | CeSet, s: int) -> frozenset[int]:
    """W^s_{sigma(n)} for the tree normalizer."""
    return sigma_T_advance(tree, _as_ce(n), SigmaTState(), s).output()


def sigma_T_limit(tree: Tree, n: int | CeSet, max_stage: float) -> tuple[frozenset[int], int | None]:
    """Output after W_n stops changing, with the stage at which it was reached.

    The stage is None when W_n still changes after max_stage.
    """
    wn = _as_ce(n)
    tip = None
    reached = 0
    read: int | None = 0
    while read is not None and read <= max_stage:
        new = sigma_T_step(tree, wn.stage(read), tip)
        if new != tip:
            tip, reached = new, read + 1
        read = wn.next_change(read)
    out = frozenset() if tip is None else path_codes(tip)
    return out, (reached if read is None else None)


# ---------------------------------------------------------------------------
# a computable tree with no computable infinite path


def _inseparable_member(x: Seq) -> bool:
    from .kernel import Halted, run

    n = len(x)
    for i, a in enumerate(x):
        if a not in (0, 1):
            return False
        r = run(i, i, n)
        if isinstance(r, Halted):
            if r.value == 0 and a != 1:
                return False
            if r.value == 1 and a != 0:
                return False
    return True


@lru_cache(maxsize=1)
def _inseparable_program() -> int:
    """0/1 membership program on delta codes for the inseparable tree."""
    a = Asm()
    # R1 = code.  code 0 is the root.
    a.zero(2)
    a.jeq(1, 2, "yes")
    a.const(3, 1)
    a.copy(1, 4)
    a.native(4, 3, "monus")     # R4 = code - 1
    a.native(5, 4, "fst")       # R5 = length - 1
    a.native(6, 4, "snd")       # R6 = rest of the pairing chain
    a.copy(5, 7)
    a.succ(7)                   # R7 = length = stage
    a.zero(8)                   # R8 = position i
    a.label("loop")
    a.jeq(8, 5, "last")
    a.native(9, 6, "fst")       # entry
    a.native(6, 6, "snd")
    a.jump("check")
    a.label("last")
    a.copy(6, 9)
    a.label("check")
    # entry must be 0 or 1
    a.zero(10)
    a.jeq(9, 10, "bin")
    a.jeq(9, 3, "bin")
    a.jump("no")
    a.label("bin")
    # R11 = bounded(pair(i, n), i): 0 unless phi_i(i) halts within n steps
    a.copy(8, 11)
    a.native(11, 7, "pair")
    a.native(11, 8, "bounded")
    a.jeq(11, 10, "next")
    a.const(12, 2)
    a.jeq(11, 3, "in_a")        # halted with 0
    a.jeq(11, 12, "in_b")       # halted with 1
    a.jump("next")
    a.label("in_a")
    a.jeq(9, 3, "next")
    a.jump("no")
    a.label("in_b")
    a.jeq(9, 10, "next")
    a.jump("no")
    a.label("next")
    a.jeq(8, 5, "yes")
    a.succ(8)
    a.jump("loop")
    a.label("no")
    a.zero(1)
    a.jump("end")
    a.label("yes")
    a.const(1, 1)
    return a.index()


def inseparable_tree() -> Tree:
    """Binary sequences consistent with separating {e : phi_e(e) = 0} from
    {e : phi_e(e) = 1}, both approximated at stage |tau|."""
    return Tree(program=_inseparable_program(), predicate=_inseparable_member,
                alphabet=(0, 1), name="inseparable")


def iter_vertices(tree: Tree, depth: int) -> Iterator[Seq]:
    yield from sorted(tree.truncate(depth).vertices, key=delta_encode)
