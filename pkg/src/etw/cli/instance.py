"""The .etw instance format.

A file is a sequence of blocks, one header per block::

    # comment
    program inc {
      S 1
    }
    program empty index 1
    program evens finite [0 2 4]
    tree t1 explicit { vertices: [() (0) (1) (0 0)] }
    tree ins builtin inseparable depth 4
    family p01 intersection-with [0 1] { members: [[] [0] [1] [0 1]] }
    family two discrete { members: [[0] [1]] }
    family custom sigma inc { members: [[0]] }
    domain d explicit { elements: [bot a b]; leq: [bot<a bot<b] }
    domain dia builtin diamond
    space x1 from-tree t1
    space x2 from-family p01
    space x3 from-domain d
    space x4 explicit { points: [a b c]; opens: [[a] [a b]] }
    scenario s { verb: verify; target: space-from-tree; name: t1; budget: 100000 }

Names share one namespace.  Bodies hold ``key: value`` entries separated by
newlines or ``;``; program bodies hold program text.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any

from ..domains import DomainBasis, domain_fixtures, explicit_domain
from ..kernel import (
    ADD, IDENTITY, LOOP, PROJ1, PROJ2, const_index, encode_program, finite_set_index,
    parse_program,
)
from ..numberings import WnFamily, discrete_sigma, intersection_sigma
from ..spaces import Space, explicit_space
from ..trees import Seq, Tree, explicit_tree, format_seq, inseparable_tree
from ..verdict import jsonable

KEYWORDS = ("program", "tree", "family", "domain", "space", "scenario")
BUILTIN_PROGRAMS = {"identity": IDENTITY, "loop": LOOP, "add": ADD, "proj1": PROJ1, "proj2": PROJ2}


class InstanceError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None) -> None:
        self.message = message
        self.line = line
        self.path = path
        where = f"{path or '<instance>'}:{line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass
class Block:
    keyword: str
    name: str
    kind: list[str]
    body: str | None
    line: int


@dataclass
class Instance:
    programs: dict[str, int] = field(default_factory=dict)
    trees: dict[str, Tree] = field(default_factory=dict)
    families: dict[str, WnFamily] = field(default_factory=dict)
    domains: dict[str, DomainBasis] = field(default_factory=dict)
    spaces: dict[str, dict[str, Any]] = field(default_factory=dict)
    scenarios: dict[str, dict[str, Any]] = field(default_factory=dict)
    canonical: list[dict[str, Any]] = field(default_factory=list)

    @property
    def digest(self) -> str:
        text = json.dumps(self.canonical, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def explicit_space(self, name: str) -> Space:
        entry = self.spaces[name]
        if entry["kind"] != "explicit":
            raise KeyError(name)
        return explicit_space(entry["points"], entry["opens"], name)


# ---------------------------------------------------------------------------
# blocks


def _split_blocks(text: str) -> list[Block]:
    lines = text.splitlines()
    blocks: list[Block] = []
    i = 0
    while i < len(lines):
        raw = lines[i].split("#", 1)[0].strip()
        start = i + 1
        i += 1
        if not raw:
            continue
        if "{" in raw:
            head, rest = raw.split("{", 1)
            body_parts = []
            depth = 1
            chunk = rest
            while True:
                j = 0
                while j < len(chunk):
                    if chunk[j] == "{":
                        depth += 1
                    elif chunk[j] == "}":
                        depth -= 1
                        if depth == 0:
                            break
                    j += 1
                if depth == 0:
                    body_parts.append(chunk[:j])
                    if chunk[j + 1:].strip():
                        raise InstanceError("text after closing brace", i)
                    break
                body_parts.append(chunk)
                if i >= len(lines):
                    raise InstanceError("unterminated block", start)
                chunk = lines[i].split("#", 1)[0]
                i += 1
            body: str | None = "\n".join(body_parts)
        else:
            head, body = raw, None
        toks = head.split()
        if toks[0] not in KEYWORDS:
            raise InstanceError(f"unknown block keyword {toks[0]!r}", start)
        if len(toks) < 2:
            raise InstanceError(f"{toks[0]} block needs a name", start)
        blocks.append(Block(toks[0], toks[1], toks[2:], body, start))
    return blocks


# ---------------------------------------------------------------------------
# values

_TOKEN = re.compile(r"\[|\]|\(|\)|,|<|[^\s\[\](),<]+")


def parse_value(text: str, line: int) -> Any:
    toks = _TOKEN.findall(text)
    pos = 0

    def item() -> Any:
        nonlocal pos
        if pos >= len(toks):
            raise InstanceError("unexpected end of value", line)
        t = toks[pos]
        pos += 1
        if t == "[":
            out = []
            while True:
                if pos >= len(toks):
                    raise InstanceError("missing ]", line)
                if toks[pos] == "]":
                    pos += 1
                    return out
                if toks[pos] == ",":
                    pos += 1
                    continue
                out.append(pair_item())
        if t == "(":
            out = []
            while True:
                if pos >= len(toks):
                    raise InstanceError("missing )", line)
                if toks[pos] == ")":
                    pos += 1
                    return tuple(out)
                if toks[pos] == ",":
                    pos += 1
                    continue
                v = item()
                if not isinstance(v, int):
                    raise InstanceError(f"sequence entries must be naturals, got {v!r}", line)
                out.append(v)
        if t in ("]", ")", ",", "<"):
            raise InstanceError(f"unexpected {t!r}", line)
        return int(t) if t.isdigit() else t

    def pair_item() -> Any:
        nonlocal pos
        v = item()
        if pos < len(toks) and toks[pos] == "<":
            pos += 1
            return (v, item())
        return v

    v = pair_item()
    if pos != len(toks):
        raise InstanceError(f"trailing text in value: {' '.join(toks[pos:])}", line)
    return v


def _entries(block: Block) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if block.body is None:
        return out
    line = block.line
    for ln_off, ln in enumerate(block.body.split("\n")):
        for part in ln.split(";"):
            part = part.strip()
            if not part:
                continue
            if ":" not in part:
                raise InstanceError(f"expected 'key: value', got {part!r}", line + ln_off)
            k, v = part.split(":", 1)
            k = k.strip()
            if k in out:
                raise InstanceError(f"duplicate key {k!r}", line + ln_off)
            out[k] = parse_value(v, line + ln_off)
    return out


def _naturals(v: Any, what: str, line: int) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(x, int) for x in v):
        raise InstanceError(f"{what} must be a list of naturals", line)
    return v


# ---------------------------------------------------------------------------
# instance


def parse_instance(text: str, path: str | None = None) -> Instance:
    try:
        return _parse(text)
    except InstanceError as exc:
        if exc.path is None and path is not None:
            raise InstanceError(exc.message, exc.line, path) from None
        raise


def _parse(text: str) -> Instance:
    inst = Instance()
    seen: dict[str, int] = {}
    builtin_domains = {d.name: d for d in domain_fixtures()}
    for b in _split_blocks(text):
        if b.name in seen:
            raise InstanceError(f"name {b.name!r} already defined on line {seen[b.name]}", b.line)
        seen[b.name] = b.line
        canon: dict[str, Any] = {"block": b.keyword, "name": b.name}
        if b.keyword == "program":
            canon["index"] = inst.programs[b.name] = _program(b)
        elif b.keyword == "tree":
            tree = _tree(b)
            inst.trees[b.name] = tree
            canon["tree"] = tree.name if not tree.explicit else [format_seq(x) for x in tree.sorted_vertices()]
        elif b.keyword == "family":
            fam = _family(b, inst)
            inst.families[b.name] = fam
            canon.update(sigma=fam.sigma, members=jsonable(fam.members))
        elif b.keyword == "domain":
            d = _domain(b, builtin_domains)
            inst.domains[b.name] = d
            canon.update(elements=list(d.names), leq=sorted(d.leq_pairs))
        elif b.keyword == "space":
            entry = _space(b, inst)
            inst.spaces[b.name] = entry
            canon.update(jsonable(entry))
        else:
            entry = _entries(b)
            for key in ("verb", "target"):
                if key not in entry:
                    raise InstanceError(f"scenario needs {key!r}", b.line)
            inst.scenarios[b.name] = entry
            canon.update(jsonable(entry))
        inst.canonical.append(canon)
    return inst


def _program(b: Block) -> int:
    if b.body is not None:
        if b.kind:
            raise InstanceError("program with a body takes no kind", b.line)
        try:
            return encode_program(parse_program(b.body))
        except ValueError as exc:
            raise InstanceError(f"malformed program text: {exc}", b.line) from None
    if len(b.kind) < 2:
        raise InstanceError("expected 'program NAME index N', 'builtin NAME', 'finite [..]' or 'const N'",
                            b.line)
    kind, rest = b.kind[0], " ".join(b.kind[1:])
    if kind == "index" and rest.isdigit():
        return int(rest)
    if kind == "const" and rest.isdigit():
        return const_index(int(rest))
    if kind == "builtin":
        if rest not in BUILTIN_PROGRAMS:
            raise InstanceError(f"unknown builtin program {rest!r}", b.line)
        return BUILTIN_PROGRAMS[rest]
    if kind == "finite":
        return finite_set_index(_naturals(parse_value(rest, b.line), "finite set", b.line))
    raise InstanceError(f"unknown program kind {kind!r}", b.line)


def _tree(b: Block) -> Tree:
    if b.kind[:1] == ["explicit"]:
        verts = _entries(b).get("vertices")
        if not isinstance(verts, list) or not all(isinstance(v, tuple) for v in verts):
            raise InstanceError("tree needs 'vertices: [(..) ..]'", b.line)
        try:
            return explicit_tree(verts, b.name)
        except ValueError as exc:
            raise InstanceError(str(exc), b.line) from None
    if b.kind[:2] == ["builtin", "inseparable"]:
        tree = inseparable_tree()
        tree.name = "inseparable"
        if len(b.kind) == 4 and b.kind[2] == "depth" and b.kind[3].isdigit():
            tree = tree.truncate(int(b.kind[3]))
            tree.name = f"inseparable|{b.kind[3]}"
        elif len(b.kind) != 2:
            raise InstanceError("expected 'builtin inseparable [depth N]'", b.line)
        return tree
    raise InstanceError("expected 'explicit { vertices: ... }' or 'builtin inseparable'", b.line)


def _members(b: Block, entries: dict[str, Any], key: str = "members") -> list[list[int]] | None:
    v = entries.get(key)
    if v is None:
        return None
    if not isinstance(v, list):
        raise InstanceError(f"{key} must be a list of sets", b.line)
    return [_naturals(m, "member", b.line) for m in v]


def _family(b: Block, inst: Instance) -> WnFamily:
    entries = _entries(b)
    members = _members(b, entries)
    kind = b.kind[0] if b.kind else ""
    if kind == "intersection-with":
        items = _naturals(parse_value(" ".join(b.kind[1:]), b.line), "item list", b.line)
        sigma = intersection_sigma(items)
    elif kind == "discrete":
        if members is None:
            raise InstanceError("discrete family needs members", b.line)
        supports = _members(b, entries, "supports") or members
        sigma = discrete_sigma(members, supports)
        return WnFamily(sigma, members=[frozenset(m) for m in members], name=b.name,
                        supports=tuple(frozenset(s) for s in supports))
    elif kind == "sigma" and len(b.kind) == 2:
        ref = b.kind[1]
        if ref not in inst.programs:
            raise InstanceError(f"unresolved program {ref!r}", b.line)
        sigma = inst.programs[ref]
    else:
        raise InstanceError("expected 'intersection-with [..]', 'discrete' or 'sigma PROGRAM'", b.line)
    return WnFamily(sigma, members=None if members is None else [frozenset(m) for m in members],
                    name=b.name)


def _domain(b: Block, builtin: dict[str, DomainBasis]) -> DomainBasis:
    if b.kind[:1] == ["builtin"] and len(b.kind) == 2:
        if b.kind[1] not in builtin:
            raise InstanceError(f"unknown builtin domain {b.kind[1]!r}", b.line)
        return builtin[b.kind[1]]
    if b.kind == ["explicit"]:
        e = _entries(b)
        elements = e.get("elements")
        leq = e.get("leq", [])
        if not isinstance(elements, list) or not elements:
            raise InstanceError("domain needs 'elements: [..]' (least element first)", b.line)
        elements = [str(x) for x in elements]
        pairs = []
        for p in leq:
            if not (isinstance(p, tuple) and len(p) == 2):
                raise InstanceError("leq entries are written a<b", b.line)
            x, y = (str(v) for v in p)
            for v in (x, y):
                if v not in elements:
                    raise InstanceError(f"unknown element {v!r}", b.line)
            pairs.append((x, y))
        try:
            return explicit_domain(elements, pairs, b.name)
        except ValueError as exc:
            raise InstanceError(str(exc), b.line) from None
    raise InstanceError("expected 'explicit { elements: ..; leq: .. }' or 'builtin NAME'", b.line)


def _space(b: Block, inst: Instance) -> dict[str, Any]:
    kind = b.kind[0] if b.kind else ""
    refs = {"from-tree": inst.trees, "from-family": inst.families, "from-domain": inst.domains}
    if kind in refs:
        if len(b.kind) != 2:
            raise InstanceError(f"expected 'space NAME {kind} REF'", b.line)
        if b.kind[1] not in refs[kind]:
            raise InstanceError(f"unresolved reference {b.kind[1]!r}", b.line)
        return {"kind": kind, "ref": b.kind[1]}
    if kind == "explicit":
        e = _entries(b)
        points = e.get("points")
        opens = e.get("opens", [])
        if not isinstance(points, list) or not isinstance(opens, list):
            raise InstanceError("explicit space needs 'points: [..]' and 'opens: [[..] ..]'", b.line)
        for o in opens:
            if not isinstance(o, list) or any(p not in points for p in o):
                raise InstanceError("every open must list known points", b.line)
        return {"kind": "explicit", "points": points, "opens": opens}
    raise InstanceError("expected from-tree, from-family, from-domain or explicit", b.line)


def seq_arg(text: str) -> Seq:
    """A vertex written like (0 1) on the command line."""
    v = parse_value(text, 0)
    if not isinstance(v, tuple):
        raise InstanceError(f"expected a sequence like (0 1), got {text!r}")
    return v
