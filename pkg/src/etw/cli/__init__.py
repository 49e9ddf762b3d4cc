"""Command line: ``etw <verb> <target> [names...] [flags]``.

Exit status: 0 verified, 1 refuted, 2 unknown, 3 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from typing import Any, Sequence

from .. import __version__
from .commands import (
    DEFAULT_BOUND, DEFAULT_BUDGET, DEFAULT_STAGES, DEMO_BUDGETS, HANDLERS, Settings, UsageError,
    job_verdict, make_job, timed,
)
from .instance import Instance, InstanceError, parse_instance
from .jobs import SnapshotError, read_snapshot, write_snapshot
from .report import EXIT_USAGE, Report

__all__ = ["main", "run_command", "parse_instance", "load_instance", "bundled_instance_text"]

VERBS = ("construct", "enumerate", "verify", "demo")

if hasattr(sys, "set_int_max_str_digits"):
    # program indices routinely run to tens of thousands of digits
    sys.set_int_max_str_digits(0)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _natural(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a natural number: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"not a natural number: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="etw", description="Constructions and budgeted checks on effectively "
                                          "enumerable spaces.")
    p.add_argument("--version", action="version", version=f"etw {__version__}")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("target")
    p.add_argument("names", nargs="*", help="instance names or other target arguments")
    p.add_argument("--budget", type=_natural, help="interpreter steps per run")
    p.add_argument("--stages", type=_natural, help="enumeration stages")
    p.add_argument("--bound", type=_natural, help="observation bound")
    p.add_argument("--out", help="write the report here (timings go to OUT.meta.json)")
    p.add_argument("--snapshot", help="enumerate: save the job state here when done")
    p.add_argument("--resume", help="enumerate: continue from this snapshot")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--instance", help=".etw instance file (default: bundled fixtures)")
    return p


def bundled_instance_text() -> str:
    return resources.files(__package__).joinpath("fixtures.etw").read_text()


def load_instance(path: str | None) -> Instance:
    if path is None:
        return parse_instance(bundled_instance_text(), "fixtures.etw")
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), path)


def _default_budget() -> int:
    env = os.environ.get("ETW_DEFAULT_BUDGET")
    if env is None:
        return DEFAULT_BUDGET
    try:
        v = int(env)
    except ValueError:
        raise UsageError(f"ETW_DEFAULT_BUDGET is not a natural number: {env!r}") from None
    if v < 0:
        raise UsageError(f"ETW_DEFAULT_BUDGET is not a natural number: {env!r}")
    return v


def run_command(verb: str, target: str, names: Sequence[str], inst: Instance, *,
                budget: int | None = None, stages: int | None = None, bound: int | None = None,
                snapshot: str | None = None, resume: str | None = None) -> Report:
    """Execute one command and return its report (raises UsageError)."""
    names = list(names)
    if target == "scenario":
        entry = dict(inst.scenarios.get(names[0], {})) if len(names) == 1 else None
        if not entry:
            raise UsageError("scenario needs one known scenario name")
        if entry["verb"] != verb:
            raise UsageError(f"scenario {names[0]!r} is a {entry['verb']} scenario")
        target = str(entry["target"])
        names = [str(entry["name"])] if "name" in entry else []
        names += [str(a) for a in entry.get("args", [])]
        budget = budget if budget is not None else entry.get("budget")
        stages = stages if stages is not None else entry.get("stages")
        bound = bound if bound is not None else entry.get("bound")
    if budget is None:
        budget = DEMO_BUDGETS.get(target, _default_budget()) if verb == "demo" else _default_budget()
    cfg = Settings(budget, DEFAULT_STAGES if stages is None else stages,
                   DEFAULT_BOUND if bound is None else bound)
    if verb != "enumerate" and (snapshot or resume):
        raise UsageError("--snapshot and --resume apply to enumerate only")
    report = Report(__version__, inst.digest, {"verb": verb, "target": target, "names": names},
                    cfg.record())
    if verb == "enumerate":
        job = make_job(inst, target, names, cfg)
        if resume:
            try:
                snap = read_snapshot(resume)
            except (OSError, SnapshotError) as exc:
                raise UsageError(str(exc)) from None
            if snap["job"] != job.kind or snap["params"] != _roundtrip(job.params):
                raise UsageError(f"snapshot {resume} belongs to a different job")
            if snap["instance_digest"] != inst.digest:
                raise UsageError(f"snapshot {resume} was taken on a different instance")
            job.state = snap["state"]
        verdict, secs = timed(lambda: (job.advance(cfg.stages), job_verdict(job))[1])
        report.add(verdict, secs)
        if snapshot:
            write_snapshot(snapshot, job, inst.digest)
        return report
    if verb not in HANDLERS:
        raise UsageError(f"unknown verb {verb!r}")
    for verdict, secs in HANDLERS[verb](inst, target, names, cfg):
        report.add(verdict, secs)
    return report


def _roundtrip(obj: Any) -> Any:
    import json
    return json.loads(json.dumps(obj))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_intermixed_args(argv)
    try:
        inst = load_instance(args.instance)
        report = run_command(args.verb, args.target, args.names, inst, budget=args.budget,
                             stages=args.stages, bound=args.bound, snapshot=args.snapshot,
                             resume=args.resume)
    except (UsageError, InstanceError, OSError) as exc:
        print(f"etw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.to_json() if args.format == "json" else report.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(report.meta_json())
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
