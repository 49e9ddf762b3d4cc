"""Tri-state verdicts shared by every check."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class Status(str, Enum):
    VERIFIED = "verified"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


@dataclass
class Verdict:
    check: str
    status: Status
    witness: Any = None
    budget: int | None = None
    saturation_stage: int | None = None

    @property
    def verified(self) -> bool:
        return self.status is Status.VERIFIED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"check": self.check, "verdict": self.status.value}
        if self.witness is not None:
            rec["witness"] = jsonable(self.witness)
        rec["budget"] = self.budget
        rec["saturation_stage"] = self.saturation_stage
        return rec


def combine(check: str, parts: list[Verdict], budget: int | None = None) -> Verdict:
    """Refuted if any part is, else Unknown if any part is, else Verified."""
    for status in (Status.REFUTED, Status.UNKNOWN):
        bad = [p for p in parts if p.status is status]
        if bad:
            return Verdict(check, status, witness=bad[0].to_record(), budget=budget)
    stages = [p.saturation_stage for p in parts if p.saturation_stage is not None]
    return Verdict(check, Status.VERIFIED, budget=budget,
                   saturation_stage=max(stages) if stages else None)


def jsonable(obj: Any) -> Any:
    """Finite sets become sorted lists, tuples become arrays."""
    if isinstance(obj, Verdict):
        return obj.to_record()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (set, frozenset)):
        return [jsonable(x) for x in sorted(obj, key=_sort_key)]
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if hasattr(obj, "to_record"):
        return obj.to_record()
    return obj


def _sort_key(x: Any) -> tuple:
    if isinstance(x, (int, float)):
        return (0, x)
    if isinstance(x, tuple):
        return (1, len(x), x)
    return (2, str(x))


@dataclass
class Trace:
    """Ordered records emitted by a demonstration."""

    name: str
    records: list[dict[str, Any]] = field(default_factory=list)

    def add(self, **rec: Any) -> None:
        self.records.append(rec)

    def to_record(self) -> dict[str, Any]:
        return {"trace": self.name, "records": jsonable(self.records)}
