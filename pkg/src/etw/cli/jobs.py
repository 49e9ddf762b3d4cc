"""Stage-by-stage enumeration jobs with snapshot and resume.

Every job keeps its whole progress in a JSON-able ``state``; ``advance(s)``
moves it to stage s.  Resuming from a saved state therefore gives exactly
the result of an uninterrupted run.
"""

from __future__ import annotations

import json
from typing import Any, ClassVar

from ..domains import DomainBasis, ElementApprox, alpha_c, transitive_presentation
from ..kernel import Halted, run_clocked
from ..numberings import CeSet, FiniteCeSet, ce_set
from ..trees import Tree, delta_decode, delta_encode, format_seq, path_codes, sigma_T_step

MAGIC = b"ETWSNAP1"
SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    pass


class Job:
    kind: ClassVar[str] = ""

    def __init__(self, params: dict[str, Any], state: dict[str, Any] | None = None) -> None:
        self.params = params
        self.state = state if state is not None else self.initial()

    @property
    def stage(self) -> int:
        return self.state["stage"]

    def initial(self) -> dict[str, Any]:
        return {"stage": 0}

    def advance(self, s: int) -> None:
        raise NotImplementedError

    def result(self) -> dict[str, Any]:
        raise NotImplementedError


class _RunJob(Job):
    """Shared bookkeeping for W_e and the image of phi_e.

    ``halts[x] = [steps, value]`` once e is seen halting on x; inputs not yet
    seen halting are rerun with the larger step bound on each advance.
    """

    def initial(self) -> dict[str, Any]:
        return {"stage": 0, "halts": {}}

    def advance(self, s: int) -> None:
        if s <= self.stage:
            return
        e = self.params["program"]
        halts = self.state["halts"]
        for x in range(s + 1):
            if str(x) in halts:
                continue
            r = run_clocked(e, x, s)
            if isinstance(r, Halted):
                halts[str(x)] = [r.steps, r.value]
        self.state["stage"] = s

    def _entries(self) -> list[tuple[int, int, int]]:
        """(x, stage at which x is seen, value)."""
        return sorted((int(x), max(int(x), st), v) for x, (st, v) in self.state["halts"].items())


class WeJob(_RunJob):
    kind = "we"

    def result(self) -> dict[str, Any]:
        entries = self._entries()
        return {"members": [x for x, _, _ in entries],
                "entered_at": {str(x): t for x, t, _ in entries}}


class ImageJob(_RunJob):
    kind = "image"

    def result(self) -> dict[str, Any]:
        first: dict[int, int] = {}
        for _, t, v in self._entries():
            first[v] = min(t, first.get(v, t))
        return {"values": sorted(first), "entered_at": {str(v): first[v] for v in sorted(first)}}


class SigmaTJob(Job):
    """The tree normalizer applied to one input set, with its chain history."""

    kind = "sigma-t"

    def __init__(self, params: dict[str, Any], state: dict[str, Any] | None = None, *,
                 tree: Tree, wn: CeSet) -> None:
        self.tree = tree
        self.wn = wn
        super().__init__(params, state)

    def initial(self) -> dict[str, Any]:
        return {"stage": 0, "tip": None, "history": []}

    def advance(self, s: int) -> None:
        st = self.state
        if s <= st["stage"]:
            return
        tip = None if st["tip"] is None else delta_decode(st["tip"])
        # stage t+1 reads W^t; only change points of W can move the tip
        read: int | None = st["stage"]
        while read is not None and read <= s - 1:
            new = sigma_T_step(self.tree, self.wn.stage(read), tip)
            if new != tip:
                tip = new
                st["history"].append([read + 1, format_seq(tip)])
            read = self.wn.next_change(read)
        st["stage"] = s
        st["tip"] = None if tip is None else delta_encode(tip)

    def result(self) -> dict[str, Any]:
        tip = self.state["tip"]
        out = sorted(path_codes(delta_decode(tip))) if tip is not None else []
        return {"output": out, "tip": None if tip is None else format_seq(delta_decode(tip)),
                "history": self.state["history"]}


class AlphaCJob(Job):
    kind = "alpha-c"

    def __init__(self, params: dict[str, Any], state: dict[str, Any] | None = None, *,
                 domain: DomainBasis, w: CeSet) -> None:
        self.domain = domain
        self.w = w
        self.approx = transitive_presentation(domain.raw_waybelow())
        super().__init__(params, state)

    def initial(self) -> dict[str, Any]:
        return {"stage": 0, "g": [0], "h": [0]}

    def advance(self, s: int) -> None:
        if s <= self.stage:
            return
        start = ElementApprox(list(self.state["g"]), list(self.state["h"]))
        run = alpha_c(self.domain, self.w, s, self.approx, start)
        self.state.update(stage=s, g=run.g, h=run.h)

    def result(self) -> dict[str, Any]:
        g = self.state["g"]
        run = ElementApprox(g, self.state["h"])
        return {"value": self.domain.names[run.value], "settled_at": run.settled_at,
                "g": [self.domain.names[x] for x in g],
                "h": [None if k is None else self.domain.names[k] for k in self.state["h"]]}


class H0Job(Job):
    """Values h0(n) for n below the stage, each run with the job's budget."""

    kind = "h0"

    def initial(self) -> dict[str, Any]:
        return {"stage": 0, "values": []}

    def advance(self, s: int) -> None:
        h0, budget = self.params["h0"], self.params["budget"]
        vals = self.state["values"]
        while len(vals) < s:
            r = run_clocked(h0, len(vals), budget)
            vals.append(r.value if isinstance(r, Halted) else None)
        self.state["stage"] = max(self.stage, s)

    def result(self) -> dict[str, Any]:
        return {"values": self.state["values"],
                "undetermined": [n for n, v in enumerate(self.state["values"]) if v is None]}


JOB_KINDS = {cls.kind: cls for cls in (WeJob, ImageJob, SigmaTJob, AlphaCJob, H0Job)}


def write_snapshot(path: str, job: Job, digest: str) -> None:
    payload = {"version": SNAPSHOT_VERSION, "job": job.kind, "params": job.params,
               "instance_digest": digest, "state": job.state}
    data = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + data)


def read_snapshot(path: str) -> dict[str, Any]:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise SnapshotError(f"{path}: not an etw snapshot (bad magic)")
    try:
        payload = json.loads(data[len(MAGIC):])
    except ValueError as exc:
        raise SnapshotError(f"{path}: corrupt snapshot ({exc})") from None
    if payload.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {payload.get('version')}")
    return payload


def input_set(entry: str | int | tuple) -> CeSet:
    """W_n for a job input: a program index or the path codes of a vertex."""
    if isinstance(entry, tuple):
        return FiniteCeSet(path_codes(entry))
    return ce_set(int(entry))
