"""Command line entry point.

    finsynth MODEL [MODEL ...] [--checks conditions,geometry,...] [--formula F]
             [--budget N] [--jobs K] [--emit json|md] [--golden DIR]
             [--update-golden] [--timings] [--verify-report REPORT] [-o OUT]

``MODEL`` is a JSON model file or the name of a shipped model; ``all`` runs
every shipped model.  Exit status: 0 when every selected check completed,
1 on a schema or validation error (or a golden mismatch), 2 when a check ran
out of budget.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .budget import DEFAULT_BUDGET
from .errors import SchemaError, ValidationError
from .modelfile import canonical, load, shipped_models
from .report import GROUP_ORDER, exit_status, run, to_json, to_markdown, verify_report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finsynth", description="Check finite presheaf models with an interval.")
    p.add_argument("models", nargs="+", help="model files, shipped model names, or 'all'")
    p.add_argument("--checks", default=",".join(GROUP_ORDER), help="comma-separated groups or check names")
    p.add_argument("--formula", action="append", default=[], help="closed formula to force (repeatable)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="element budget per check")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--emit", choices=("json", "md"), default="json")
    p.add_argument("--golden", type=Path, help="compare each report with DIR/<model>.json")
    p.add_argument("--update-golden", action="store_true", help="write reports into the --golden directory")
    p.add_argument("--timings", action="store_true", help="record wall time per check (breaks byte-identity)")
    p.add_argument("--verify-report", type=Path, help="re-run the witnesses of a saved JSON report")
    p.add_argument("-o", "--output", type=Path, help="write the report here instead of stdout")
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    names = shipped_models() if args.models == ["all"] else args.models
    try:
        files = [load(n) for n in names]
    except (SchemaError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.verify_report is not None:
        saved = {r["model"]: r for r in json.loads(args.verify_report.read_text())["reports"]}
        results, ok = [], True
        for mf in files:
            if mf.name not in saved:
                print(f"error: report has no entry for {mf.name}", file=sys.stderr)
                return 1
            checked = verify_report(mf, saved[mf.name], args.budget)
            ok &= all(c["reproduced"] for c in checked)
            results.append({"model": mf.name, "witnesses": checked})
        _emit(canonical({"verified": ok, "models": results}), args.output)
        return 0 if ok else 1

    selection = [s for s in args.checks.split(",") if s]
    try:
        reports = [run(mf, selection, args.formula, args.budget, args.jobs, args.timings) for mf in files]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(to_json(reports) if args.emit == "json" else to_markdown(reports), args.output)

    status = exit_status(reports)
    if args.golden is not None:
        args.golden.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            path = args.golden / f"{rep['model']}.json"
            text = canonical(rep)
            if args.update_golden:
                path.write_text(text, encoding="utf-8")
            elif not path.exists() or path.read_text(encoding="utf-8") != text:
                print(f"golden mismatch: {path}", file=sys.stderr)
                status = status or 1
    return status


if __name__ == "__main__":
    sys.exit(main())
