"""Command-line entry point.

Exit codes: 0 success, 2 usage or missing file, 3 invalid scenario or
result document, 4 solver failure, 5 design finished without converging
(artifacts are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines, report
from .artifacts import atomic_write_text
from .linalg import DimensionError
from .model import ScenarioError, load_scenario
from .solver import DesignResult, SolverError, interleave, load_result, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_SOLVER = 4
EXIT_NOT_CONVERGED = 5

log = logging.getLogger("mbswave")


class CliError(Exception):
    def __init__(self, code: int, category: str, message: str):
        super().__init__(f"{category}: {message}")
        self.code = code


def parse_overrides(pairs: list[str] | None) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise CliError(EXIT_USAGE, "usage error", f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        value = value.strip()
        # JSON literals (lists, numbers, null) pass through; bare text stays text
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _scenario(args):
    path = Path(args.scenario)
    if not path.is_file():
        raise CliError(EXIT_USAGE, "file not found", str(path))
    overrides = parse_overrides(getattr(args, "set", None))
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    try:
        return load_scenario(path, overrides)
    except ScenarioError as exc:
        raise CliError(EXIT_SCHEMA, "schema violation", str(exc)) from None


def cmd_validate(args) -> int:
    sc = _scenario(args)
    print(
        f"ok: M={sc.m_bs} N={sc.n_sub} blocked={len(sc.blocked)} gamma={sc.gamma:.6g} "
        f"eta={sc.eta} P={sc.avg_power:.6g} i={sc.mainlobe_halfwidth}"
    )
    return EXIT_OK


def _write_run(run: report.Run, out: Path, document: dict, stem: str) -> None:
    export = report.export_run(run, out)
    document["exports"] = export
    atomic_write_text(out / f"{stem}.json", json.dumps(document, indent=2) + "\n")
    table = report.summary_table([(run.label, run.metrics)])
    atomic_write_text(out / f"{stem}_summary.txt", table)
    print(table, end="")


def cmd_design(args) -> int:
    sc = _scenario(args)
    out = Path(args.out)
    try:
        result = solve(sc)
    except SolverError as exc:
        raise CliError(EXIT_SOLVER, "solver failure", str(exc)) from None
    run = report.Run.from_result(args.label, result)
    doc = result.to_dict()
    _write_run(run, out, doc, args.label)
    print(
        f"iterations={result.iterations} converged={str(result.converged).lower()} "
        f"residuals: waveform={result.residuals['waveform']:.3e} "
        f"mainlobe={result.residuals['mainlobe']:.3e}"
    )
    if not result.converged:
        print("warning: design did not converge; artifacts written with converged=false",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_baseline(args) -> int:
    sc = _scenario(args)
    out = Path(args.out)
    s0 = None
    if args.source:
        _, x_src, _ = _read_result(Path(args.source))
        s0 = np.fft.fft(x_src, axis=1)
        s0[:, ~sc.active_mask] = 0.0
        s0[:, sc.active_mask] /= np.abs(s0[:, sc.active_mask])
    s, x, h = baselines.baseline_design(sc, args.kind, s=s0)
    label = args.label or args.kind
    run = report.Run(label, sc, x, h)
    doc = {
        "kind": args.kind,
        "scenario": sc.to_dict(),
        "metrics": run.metrics.to_dict(),
        "s": [interleave(row) for row in s],
        "h": [interleave(row) for row in h],
    }
    _write_run(run, out, doc, label)
    return EXIT_OK


def _read_result(path: Path):
    if not path.is_file():
        raise CliError(EXIT_USAGE, "file not found", str(path))
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return load_result(data)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ScenarioError, DimensionError) as exc:
        raise CliError(EXIT_SCHEMA, "schema violation", f"{path}: {exc}") from None


def cmd_compare(args) -> int:
    runs = []
    seen: dict[str, int] = {}
    for name in args.results:
        path = Path(name)
        sc, x, h = _read_result(path)
        label = path.stem
        if label in seen:
            seen[label] += 1
            label = f"{label}_{seen[label]}"
        else:
            seen[label] = 0
        runs.append(report.Run(label, sc, x, h))
    try:
        rep = report.compare(runs)
    except ValueError as exc:
        raise CliError(EXIT_SCHEMA, "incompatible results", str(exc)) from None
    print(report.summary_table([(r.label, r.metrics) for r in runs]), end="")
    for key, delta in rep.deltas.items():
        cross = "n/a" if delta["cross"] is None else f"{delta['cross']:+.2f} dB"
        print(f"{key}: auto {delta['auto']:+.2f} dB, cross {cross}")
    if args.out:
        report.write_report(rep, runs, Path(args.out), name="compare.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    try:
        sizes = [int(v) for v in args.masks.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_USAGE, "usage error", f"bad --masks list {args.masks!r}") from None
    try:
        rep, runs = report.mask_sweep(sc, sizes, jobs=args.jobs)
    except ValueError as exc:
        raise CliError(EXIT_SCHEMA, "schema violation", str(exc)) from None
    except SolverError as exc:
        raise CliError(EXIT_SOLVER, "solver failure", str(exc)) from None
    report.write_report(rep, runs, Path(args.out), name="sweep.json")
    print(report.summary_table([(r.label, r.metrics) for r in runs]), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbswave",
        description="Joint OFDM sequence / mismatched filter design for multi-BS sensing.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, out_required=True):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a scenario field (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("design", help="run the joint design")
    scenario_args(p)
    p.add_argument("--label", default="design", help="artifact name prefix")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("baseline", help="evaluate a matched-filter baseline")
    scenario_args(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in baselines.BaselineKind])
    p.add_argument("--from", dest="source",
                   help="design result whose sequences the matched filter is applied to")
    p.add_argument("--label")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compare", help="PSL deltas between result files")
    p.add_argument("results", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="design over several blocked-band sizes")
    scenario_args(p)
    p.add_argument("--masks", required=True, help="comma-separated blocked-band sizes")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
