"""Deterministic JSON reports; wall times go to a separate metadata file."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

from ..verdict import Status, Verdict, jsonable

TOOL = "etw"
REPORT_VERSION = 1

EXIT_CODES = {Status.VERIFIED: 0, Status.REFUTED: 1, Status.UNKNOWN: 2}
EXIT_USAGE = 3


@dataclass
class Report:
    version: str
    digest: str
    command: dict[str, Any]
    settings: dict[str, Any]
    records: list[dict[str, Any]] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)
    statuses: list[Status] = field(default_factory=list)

    def add(self, verdict: Verdict, seconds: float) -> None:
        self.records.append(verdict.to_record())
        self.statuses.append(verdict.status)
        self.timings.append(round(seconds, 6))

    @property
    def status(self) -> Status:
        for s in (Status.REFUTED, Status.UNKNOWN):
            if s in self.statuses:
                return s
        return Status.VERIFIED

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_json(self) -> str:
        body = {"tool": TOOL, "tool_version": self.version, "report_version": REPORT_VERSION,
                "instance_digest": self.digest, "command": jsonable(self.command),
                "settings": jsonable(self.settings), "status": self.status.value,
                "records": self.records}
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    def meta_json(self) -> str:
        meta = {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "wall_time_seconds": [{"check": r["check"], "seconds": t}
                                      for r, t in zip(self.records, self.timings)],
                "total_seconds": round(sum(self.timings), 6)}
        return json.dumps(meta, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"{r['check']}: {r['verdict']}" for r in self.records]
        lines.append(f"status: {self.status.value}")
        return "\n".join(lines) + "\n"
