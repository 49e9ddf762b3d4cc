"""Step-bounded register machines with a Goedel numbering.

The machine has unbounded natural-number registers, input in register 1 and
output read from register 1 once the program counter runs past the last
instruction.  Besides the four classical instructions (zero, successor,
transfer, jump-if-equal) there are two instructions that make index
manipulation affordable at desk scale: ``C r k`` loads a constant and
``N r s op`` applies one of a fixed table of natives to registers r and s,
writing the result into r.  Natives that run other programs charge the
nested steps to the caller, so every result still has a well-defined step
count.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

__all__ = [
    "Zero", "Succ", "Transfer", "JumpIfEqual", "Const", "Native", "Program",
    "NATIVES", "Halted", "Exhausted", "EXHAUSTED", "EvalResult",
    "pair", "unpair", "dn_encode", "dn_decode", "encode_seq", "decode_seq",
    "encode_instruction", "decode_instruction", "encode_program", "decode_program",
    "parse_program", "format_program", "run", "run_clocked", "we_stage", "image_stage",
    "smn", "fixpoint", "Asm", "IDENTITY", "LOOP", "const_index", "finite_set_index",
    "finite_set_steps", "match_finite_set", "lookup_index", "PROJ1", "PROJ2", "ADD",
    "MAX_INDEX_BITS", "MAX_NESTING", "encode_list", "decode_list",
]


# ---------------------------------------------------------------------------
# codings of pairs, finite sets and finite sequences


def pair(x: int, y: int) -> int:
    """Cantor pairing (x+y)(x+y+1)/2 + y."""
    s = x + y
    return s * (s + 1) // 2 + y


def unpair(n: int) -> tuple[int, int]:
    w = (math.isqrt(8 * n + 1) - 1) // 2
    y = n - w * (w + 1) // 2
    return w - y, y


def dn_decode(n: int) -> frozenset[int]:
    """D_n: the set of bit positions of n."""
    out = []
    i = 0
    while n:
        if n & 1:
            out.append(i)
        n >>= 1
        i += 1
    return frozenset(out)


def dn_encode(items: Iterable[int]) -> int:
    n = 0
    for x in set(items):
        n |= 1 << x
    return n


def encode_seq(xs: Iterable[int]) -> int:
    """Length-prefixed iterated pairing; 0 codes the empty sequence."""
    xs = tuple(xs)
    if not xs:
        return 0
    acc = xs[-1]
    for a in reversed(xs[:-1]):
        acc = pair(a, acc)
    return pair(len(xs) - 1, acc) + 1


def decode_seq(n: int) -> tuple[int, ...]:
    if n == 0:
        return ()
    length, acc = unpair(n - 1)
    out = []
    for _ in range(length):
        a, acc = unpair(acc)
        out.append(a)
    out.append(acc)
    return tuple(out)


@lru_cache(maxsize=None)
def _power(base: int, k: int) -> int:
    return base ** k


def _std_digits(m: int, width: int, base: int, out: list[int]) -> None:
    # Appends exactly width base-`base` digits of m, least significant first.
    if width <= 48:
        for _ in range(width):
            m, d = divmod(m, base)
            out.append(d)
        return
    half = width // 2
    hi, lo = divmod(m, _power(base, half))
    _std_digits(lo, half, base, out)
    _std_digits(hi, width - half, base, out)


def _std_value(digits: list[int], base: int) -> int:
    if len(digits) <= 48:
        n = 0
        for d in reversed(digits):
            n = n * base + d
        return n
    half = len(digits) // 2
    return _std_value(digits[:half], base) + _power(base, half) * _std_value(digits[half:], base)


def _repunit(base: int, length: int) -> int:
    # 1 + base + ... + base^(length-1): the least value with `length` digits
    return (_power(base, length) - 1) // (base - 1)


def _bijective_digits(n: int, base: int) -> list[int]:
    """Digits 1..base of n in bijective numeration, least significant first."""
    if n == 0:
        return []
    length = max(1, int(math.log(n * (base - 1) + 1, base)) - 1) if n.bit_length() < 1000 \
        else max(1, (n * (base - 1)).bit_length() * 1000 // int(1000 * math.log2(base)) - 2)
    while _repunit(base, length + 1) <= n:
        length += 1
    while _repunit(base, length) > n:
        length -= 1
    out: list[int] = []
    _std_digits(n - _repunit(base, length), length, base, out)
    return [d + 1 for d in out]


def _from_bijective(digits: Iterable[int], base: int) -> int:
    digits = list(digits)
    if not digits:
        return 0
    return _std_value([d - 1 for d in digits], base) + _repunit(base, len(digits))


def encode_list(xs: Iterable[int]) -> int:
    """Size-efficient bijection from finite sequences to naturals.

    0 codes the empty sequence; otherwise each entry is written in bijective
    base 2 (digits 1, 2), entries are separated by the digit 3, and the
    resulting word is read in bijective base 3 and shifted by one.
    """
    xs = list(xs)
    if not xs:
        return 0
    digits: list[int] = []
    for i, x in enumerate(xs):
        if i:
            digits.append(3)
        digits.extend(_bijective_digits(x, 2))
    return _from_bijective(digits, 3) + 1


def decode_list(n: int) -> tuple[int, ...]:
    if n == 0:
        return ()
    out = []
    block: list[int] = []
    for d in _bijective_digits(n - 1, 3):
        if d == 3:
            out.append(_from_bijective(block, 2))
            block = []
        else:
            block.append(d)
    out.append(_from_bijective(block, 2))
    return tuple(out)


# ---------------------------------------------------------------------------
# instructions


@dataclass(frozen=True)
class Zero:
    r: int


@dataclass(frozen=True)
class Succ:
    r: int


@dataclass(frozen=True)
class Transfer:
    src: int
    dst: int


@dataclass(frozen=True)
class JumpIfEqual:
    a: int
    b: int
    target: int


@dataclass(frozen=True)
class Const:
    r: int
    value: int


@dataclass(frozen=True)
class Native:
    r: int
    s: int
    op: str


Instruction = Union[Zero, Succ, Transfer, JumpIfEqual, Const, Native]

# r := op(R[r], R[s]).  fst/snd read only R[s].
NATIVES: tuple[str, ...] = (
    "pair", "fst", "snd", "eval", "bounded", "clocked", "smn", "bit", "add", "monus",
)
_NATIVE_ID = {name: i for i, name in enumerate(NATIVES)}
_KINDS = 6


def encode_instruction(ins: Instruction) -> int:
    if isinstance(ins, Zero):
        return _KINDS * (ins.r - 1)
    if isinstance(ins, Succ):
        return _KINDS * (ins.r - 1) + 1
    if isinstance(ins, Transfer):
        return _KINDS * pair(ins.src - 1, ins.dst - 1) + 2
    if isinstance(ins, JumpIfEqual):
        return _KINDS * pair(ins.a - 1, pair(ins.b - 1, ins.target - 1)) + 3
    if isinstance(ins, Const):
        return _KINDS * pair(ins.r - 1, ins.value) + 4
    if isinstance(ins, Native):
        body = pair(ins.r - 1, ins.s - 1) * len(NATIVES) + _NATIVE_ID[ins.op]
        return _KINDS * body + 5
    raise TypeError(f"not an instruction: {ins!r}")


def decode_instruction(n: int) -> Instruction:
    body, kind = divmod(n, _KINDS)
    if kind == 0:
        return Zero(body + 1)
    if kind == 1:
        return Succ(body + 1)
    if kind == 2:
        a, b = unpair(body)
        return Transfer(a + 1, b + 1)
    if kind == 3:
        a, rest = unpair(body)
        b, q = unpair(rest)
        return JumpIfEqual(a + 1, b + 1, q + 1)
    if kind == 4:
        r, k = unpair(body)
        return Const(r + 1, k)
    regs, op = divmod(body, len(NATIVES))
    r, s = unpair(regs)
    return Native(r + 1, s + 1, NATIVES[op])


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...] = ()

    def __len__(self) -> int:
        return len(self.instructions)

    @property
    def index(self) -> int:
        return encode_program(self)

    def text(self) -> str:
        return format_program(self)


def encode_program(p: Program) -> int:
    return encode_list(encode_instruction(i) for i in p.instructions)


# Decoding is total, but an index wider than this is not materialized; the
# interpreter treats such indices as non-halting.
MAX_INDEX_BITS = 1 << 18


@lru_cache(maxsize=65536)
def decode_program(e: int) -> Program:
    if e.bit_length() > MAX_INDEX_BITS:
        raise OverflowError(f"program index wider than {MAX_INDEX_BITS} bits")
    return Program(tuple(decode_instruction(c) for c in decode_list(e)))


# ---------------------------------------------------------------------------
# program text


_LINE = re.compile(r"^\s*([A-Za-z])\s*(.*)$")


def parse_program(text: str) -> Program:
    """Parse one instruction per line: ``Z r``, ``S r``, ``T r s``,
    ``J r s q``, ``C r k``, ``N r s op``.  ``#`` starts a comment."""
    out: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        op, args = m.group(1).upper(), m.group(2).split()
        try:
            out.append(_make(op, args))
        except (ValueError, KeyError, IndexError) as exc:
            raise ValueError(f"line {lineno}: bad instruction {raw.strip()!r} ({exc})") from None
    return Program(tuple(out))


def _make(op: str, args: list[str]) -> Instruction:
    arity = {"Z": 1, "S": 1, "T": 2, "J": 3, "C": 2, "N": 3}[op]
    if len(args) != arity:
        raise ValueError(f"expected {arity} operands")
    if op == "N":
        name = args[2].lower()
        if name.isdigit():
            name = NATIVES[int(name)]
        elif name not in _NATIVE_ID:
            raise ValueError(f"unknown native {args[2]}")
        regs = [int(a) for a in args[:2]]
        if min(regs) < 1:
            raise ValueError("registers are 1-based")
        return Native(regs[0], regs[1], name)
    nums = [int(a) for a in args]
    if op == "C":
        if nums[0] < 1 or nums[1] < 0:
            raise ValueError("register must be >= 1 and constant >= 0")
        return Const(nums[0], nums[1])
    if min(nums) < 1:
        raise ValueError("registers and jump targets are 1-based")
    return {"Z": Zero, "S": Succ, "T": Transfer, "J": JumpIfEqual}[op](*nums)


def format_program(p: Program) -> str:
    lines = []
    for ins in p.instructions:
        if isinstance(ins, Zero):
            lines.append(f"Z {ins.r}")
        elif isinstance(ins, Succ):
            lines.append(f"S {ins.r}")
        elif isinstance(ins, Transfer):
            lines.append(f"T {ins.src} {ins.dst}")
        elif isinstance(ins, JumpIfEqual):
            lines.append(f"J {ins.a} {ins.b} {ins.target}")
        elif isinstance(ins, Const):
            lines.append(f"C {ins.r} {ins.value}")
        else:
            lines.append(f"N {ins.r} {ins.s} {ins.op}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Halted:
    value: int
    steps: int


@dataclass(frozen=True)
class Exhausted:
    pass


EXHAUSTED = Exhausted()
EvalResult = Union[Halted, Exhausted]


class _OutOfFuel(Exception):
    pass


_J, _S, _T, _Z, _C, _N, _LOOP = range(7)


class _Compiled:
    __slots__ = ("code", "nregs", "finite")

    def __init__(self, code, nregs, finite):
        self.code = code
        self.nregs = nregs
        self.finite = finite


@lru_cache(maxsize=65536)
def _compile(e: int) -> _Compiled | None:
    try:
        prog = decode_program(e)
    except OverflowError:
        return None
    finite = match_finite_set(prog)
    if finite is not None:
        return _Compiled((), 0, {x: 2 * (i + 1) for i, x in enumerate(finite)})
    slots: dict[int, int] = {1: 0}

    def slot(r: int) -> int:
        if r not in slots:
            slots[r] = len(slots)
        return slots[r]

    code = []
    for pc, ins in enumerate(prog.instructions):
        if isinstance(ins, JumpIfEqual):
            a, b, q = slot(ins.a), slot(ins.b), ins.target - 1
            code.append((_LOOP if a == b and q == pc else _J, a, b, q))
        elif isinstance(ins, Succ):
            code.append((_S, slot(ins.r), 0, 0))
        elif isinstance(ins, Transfer):
            code.append((_T, slot(ins.src), slot(ins.dst), 0))
        elif isinstance(ins, Zero):
            code.append((_Z, slot(ins.r), 0, 0))
        elif isinstance(ins, Const):
            code.append((_C, slot(ins.r), ins.value, 0))
        else:
            code.append((_N, slot(ins.r), slot(ins.s), _NATIVE_ID[ins.op]))
    return _Compiled(tuple(code), len(slots), None)


# Nested runs (eval/bounded/clocked inside a program) deeper than this count
# as running out of fuel, so deep self-reference fails the same way everywhere.
MAX_NESTING = 120
_depth = 0


def _execute(e: int, x: int, fuel: int) -> tuple[int, int]:
    """Run program e on x; return (value, steps) or raise _OutOfFuel."""
    global _depth
    if _depth >= MAX_NESTING:
        raise _OutOfFuel
    _depth += 1
    try:
        return _execute_body(e, x, fuel)
    finally:
        _depth -= 1


def _execute_body(e: int, x: int, fuel: int) -> tuple[int, int]:
    comp = _compile(e)
    if comp is None:
        raise _OutOfFuel
    if comp.finite is not None:
        steps = comp.finite.get(x)
        if steps is None or steps > fuel:
            raise _OutOfFuel
        return x, steps
    code = comp.code
    n = len(code)
    R = [0] * comp.nregs
    R[0] = x
    pc = 0
    used = 0
    while pc < n:
        if used >= fuel:
            raise _OutOfFuel
        used += 1
        op, a, b, c = code[pc]
        if op == _J:
            pc = c if R[a] == R[b] else pc + 1
        elif op == _S:
            R[a] += 1
            pc += 1
        elif op == _T:
            R[b] = R[a]
            pc += 1
        elif op == _Z:
            R[a] = 0
            pc += 1
        elif op == _C:
            R[a] = b
            pc += 1
        elif op == _LOOP:
            raise _OutOfFuel
        else:
            R[a], cost = _native(c, R[a], R[b], fuel - used)
            used += cost
            pc += 1
    return R[0], used


def _bounded(prog: int, x: int, bound: int, remaining: int, check_arg: bool) -> tuple[int, int]:
    if check_arg and x > bound:
        return 0, 0
    if bound <= remaining:
        try:
            v, steps = _execute(prog, x, bound)
        except _OutOfFuel:
            return 0, bound
        return v + 1, steps
    v, steps = _execute(prog, x, remaining)
    if steps > bound:  # pragma: no cover - guarded by fuel
        return 0, bound
    return v + 1, steps


def _sized(v: int, remaining: int) -> tuple[int, int]:
    # Arithmetic on wide values costs one step per 64-bit word of the result,
    # and values wider than MAX_INDEX_BITS count as running out of fuel.
    bits = v.bit_length()
    cost = bits >> 6
    if bits > MAX_INDEX_BITS or cost > remaining:
        raise _OutOfFuel
    return v, cost


def _native(op: int, a: int, b: int, remaining: int) -> tuple[int, int]:
    """Return (value, extra steps beyond the instruction itself)."""
    if op == 0:
        return _sized(pair(a, b), remaining)
    if op == 1:
        return unpair(b)[0], b.bit_length() >> 6
    if op == 2:
        return unpair(b)[1], b.bit_length() >> 6
    if op == 3:
        return _execute(a, b, remaining)
    if op == 4 or op == 5:
        prog, bound = unpair(a)
        return _bounded(prog, b, bound, remaining, op == 4)
    if op == 6:
        return _sized(smn(a, b), remaining)
    if op == 7:
        return (a >> b) & 1, 0
    if op == 8:
        return _sized(a + b, remaining)
    return max(a - b, 0), 0


def run(e: int, x: int, s: int) -> EvalResult:
    """phi_e^s(x): Halted iff e halts on x within s steps and x <= s."""
    if x > s:
        return EXHAUSTED
    return run_clocked(e, x, s)


def run_clocked(e: int, x: int, s: int) -> EvalResult:
    """Run e on x for at most s steps, with no bound on the argument."""
    try:
        v, steps = _execute(e, x, s)
    except _OutOfFuel:
        return EXHAUSTED
    return Halted(v, steps)


def we_stage(e: int, s: int) -> frozenset[int]:
    """W_e^s = {x <= s : phi_e^s(x) halts}."""
    comp = _compile(e)
    if comp is not None and comp.finite is not None:
        return frozenset(x for x, t in comp.finite.items() if x <= s and t <= s)
    return frozenset(x for x in range(s + 1) if isinstance(run(e, x, s), Halted))


def image_stage(e: int, s: int) -> frozenset[int]:
    out = set()
    for x in range(s + 1):
        r = run(e, x, s)
        if isinstance(r, Halted):
            out.add(r.value)
    return frozenset(out)


# ---------------------------------------------------------------------------
# s-m-n and the recursion theorem


def _shift(ins: Instruction, k: int) -> Instruction:
    if isinstance(ins, JumpIfEqual):
        return JumpIfEqual(ins.a, ins.b, ins.target + k)
    return ins


def smn(e: int, y: int) -> int:
    """Index e' with phi_{e'}(x) = phi_e(pair(y, x)); purely syntactic."""
    prefix = (Transfer(1, 2), Const(1, y), Native(1, 2, "pair"), Zero(2))
    body = tuple(_shift(i, len(prefix)) for i in decode_program(e).instructions)
    return encode_program(Program(prefix + body))


def fixpoint(f: int) -> int:
    """Index e with phi_e = phi_{phi_f(e)}.

    With D computing pair(u, x) |-> phi_{phi_f(smn(u, u))}(x), the index
    smn(D, D) is the fixed point.
    """
    a = Asm()
    a.copy(1, 2)
    a.native(1, 2, "fst")
    a.native(2, 2, "snd")
    a.copy(1, 3)
    a.native(1, 3, "smn")
    a.const(3, f)
    a.native(3, 1, "eval")
    a.native(3, 2, "eval")
    a.copy(3, 1)
    d = a.index()
    return smn(d, d)


# ---------------------------------------------------------------------------
# assembler with labels


class Asm:
    """Builds programs with symbolic jump labels; ``"end"`` halts."""

    def __init__(self) -> None:
        self._items: list[tuple] = []
        self._labels: dict[str, int] = {}

    def label(self, name: str) -> None:
        if name in self._labels or name == "end":
            raise ValueError(f"duplicate label {name}")
        self._labels[name] = len(self._items) + 1

    def zero(self, r: int) -> None:
        self._items.append(("Z", r))

    def succ(self, r: int) -> None:
        self._items.append(("S", r))

    def copy(self, src: int, dst: int) -> None:
        self._items.append(("T", src, dst))

    def jeq(self, a: int, b: int, target: str | int) -> None:
        self._items.append(("J", a, b, target))

    def jump(self, target: str | int) -> None:
        self._items.append(("J", 1, 1, target))

    def const(self, r: int, k: int) -> None:
        self._items.append(("C", r, k))

    def native(self, r: int, s: int, op: str) -> None:
        if op not in _NATIVE_ID:
            raise ValueError(f"unknown native {op}")
        self._items.append(("N", r, s, op))

    def hang(self) -> None:
        self._items.append(("J", 1, 1, len(self._items) + 1))

    def program(self) -> Program:
        end = len(self._items) + 1
        out: list[Instruction] = []
        for item in self._items:
            kind = item[0]
            if kind == "J":
                t = item[3]
                if isinstance(t, str):
                    t = end if t == "end" else self._labels[t]
                out.append(JumpIfEqual(item[1], item[2], t))
            elif kind == "Z":
                out.append(Zero(item[1]))
            elif kind == "S":
                out.append(Succ(item[1]))
            elif kind == "T":
                out.append(Transfer(item[1], item[2]))
            elif kind == "C":
                out.append(Const(item[1], item[2]))
            else:
                out.append(Native(item[1], item[2], item[3]))
        return Program(tuple(out))

    def index(self) -> int:
        return encode_program(self.program())


# ---------------------------------------------------------------------------
# a small library of programs


IDENTITY = 0
LOOP = encode_program(Program((JumpIfEqual(1, 1, 1),)))
PROJ1 = encode_program(Program((Native(1, 1, "fst"),)))
PROJ2 = encode_program(Program((Native(1, 1, "snd"),)))


def _add_program() -> int:
    a = Asm()
    a.native(2, 1, "fst")
    a.native(3, 1, "snd")
    a.copy(2, 1)
    a.label("loop")
    a.jeq(4, 3, "end")
    a.succ(1)
    a.succ(4)
    a.jump("loop")
    return a.index()


ADD = _add_program()


def const_index(k: int) -> int:
    """Index of the program returning k on every input."""
    return encode_program(Program((Const(1, k),)))


def _finite_set_program(items: Iterable[int]) -> Program:
    xs = sorted(set(items))
    k = len(xs)
    body: list[Instruction] = []
    for c in xs:
        body.append(Const(2, c))
        body.append(JumpIfEqual(1, 2, 2 * k + 2))
    body.append(JumpIfEqual(1, 1, 2 * k + 1))
    return Program(tuple(body))


def finite_set_index(items: Iterable[int]) -> int:
    """Index of a program that halts (returning its input) exactly on items."""
    return encode_program(_finite_set_program(items))


def finite_set_steps(items: Iterable[int], x: int) -> int | None:
    """Steps the finite-set program for items takes on x (None: diverges)."""
    xs = sorted(set(items))
    if x not in xs:
        return None
    return 2 * (xs.index(x) + 1)


def match_finite_set(p: Program) -> tuple[int, ...] | None:
    """Recognize the canonical finite-set program shape; return its elements."""
    ins = p.instructions
    if not ins or len(ins) % 2 == 0:
        return None
    k = (len(ins) - 1) // 2
    if ins[-1] != JumpIfEqual(1, 1, 2 * k + 1):
        return None
    xs = []
    for i in range(k):
        c, j = ins[2 * i], ins[2 * i + 1]
        if not (isinstance(c, Const) and c.r == 2 and j == JumpIfEqual(1, 2, 2 * k + 2)):
            return None
        if xs and c.value <= xs[-1]:
            return None
        xs.append(c.value)
    return tuple(xs)


def lookup_index(table: dict[int, int], default: int) -> int:
    """Index of a total program mapping each key of table to its value."""
    a = Asm()
    a.copy(1, 2)
    keys = sorted(table)
    for i, key in enumerate(keys):
        a.const(3, key)
        a.jeq(2, 3, f"k{i}")
    a.const(1, default)
    a.jump("end")
    for i, key in enumerate(keys):
        a.label(f"k{i}")
        a.const(1, table[key])
        a.jump("end")
    return a.index()
