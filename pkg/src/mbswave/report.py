"""Run comparison tables and figure-ready CSV/JSON exports."""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import correlation as corr
from .artifacts import atomic_write_text
from .model import Scenario
from .solver import DesignResult, solve


@dataclass
class Run:
    label: str
    scenario: Scenario
    x: np.ndarray
    h: np.ndarray
    metrics: corr.SidelobeMetrics | None = None

    def __post_init__(self):
        if self.metrics is None:
            self.metrics = corr.metrics(self.x, self.h, self.scenario)

    @property
    def profile(self) -> corr.CorrelationProfile:
        return corr.profile(self.x, self.h)

    @classmethod
    def from_result(cls, label: str, result: DesignResult) -> Run:
        return cls(label, result.scenario, result.x, result.h, result.metrics)


@dataclass
class ReportEntry:
    label: str
    metrics: corr.SidelobeMetrics
    n_blocked: int
    exports: dict[str, str] = field(default_factory=dict)


@dataclass
class ComparisonReport:
    entries: list[ReportEntry]
    deltas: dict[str, dict[str, float | None]]

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "label": e.label,
                    "n_blocked": e.n_blocked,
                    "metrics": e.metrics.to_dict(),
                    "exports": e.exports,
                }
                for e in self.entries
            ],
            "deltas": self.deltas,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def psl_delta(a: corr.SidelobeMetrics, b: corr.SidelobeMetrics) -> dict[str, float | None]:
    """PSL of ``a`` minus PSL of ``b`` in dB (negative means ``a`` is lower)."""
    cross = None
    if a.psl_cross_db is not None and b.psl_cross_db is not None:
        cross = a.psl_cross_db - b.psl_cross_db
    return {"auto": a.psl_auto_db - b.psl_auto_db, "cross": cross}


def compare(runs: list[Run]) -> ComparisonReport:
    """Pairwise PSL deltas between labeled runs sharing ``(M, N)``."""
    labels = [r.label for r in runs]
    if len(set(labels)) != len(labels):
        raise ValueError("run labels must be unique")
    if runs:
        dims = {(r.scenario.m_bs, r.scenario.n_sub) for r in runs}
        if len(dims) != 1:
            raise ValueError(f"runs have mismatched dimensions {sorted(dims)}")
    entries = [ReportEntry(r.label, r.metrics, len(r.scenario.blocked)) for r in runs]
    deltas = {
        f"{a.label} - {b.label}": psl_delta(a.metrics, b.metrics)
        for a, b in itertools.combinations(runs, 2)
    }
    return ComparisonReport(entries, deltas)


def centered_band(base: Scenario, size: int) -> tuple[int, ...]:
    """Contiguous blocked band of ``size`` carriers sharing the base band's center."""
    n = base.n_sub
    if not 0 <= size < n:
        raise ValueError(f"mask size must be in [0, {n})")
    if base.blocked:
        center = (base.blocked[0] + base.blocked[-1]) / 2
    else:
        center = (n - 1) / 2
    start = int(round(center - (size - 1) / 2))
    start = min(max(start, 0), n - size)
    return tuple(range(start, start + size))


def _solve_job(sc: Scenario) -> DesignResult:
    return solve(sc)


def mask_sweep(base: Scenario, sizes, jobs: int = 1) -> tuple[ComparisonReport, list[Run]]:
    """Design once per blocked-band size with a fixed seed; entries ordered by band size.

    The mainlobe threshold is rescaled for every mask when the base scenario
    uses the default (90% of that mask's matched mainlobe).
    """
    sizes = sorted({int(k) for k in sizes})
    scenarios = []
    for k in sizes:
        band = centered_band(base, k)
        gamma = 0.9 * (base.n_sub - k) / base.n_sub if _default_gamma(base) else base.gamma
        scenarios.append(base.replace(blocked=band, gamma=gamma))
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_job, scenarios))
    else:
        results = [_solve_job(sc) for sc in scenarios]
    runs = [Run.from_result(f"blocked{k}", res) for k, res in zip(sizes, results)]
    return compare(runs), runs


def _default_gamma(sc: Scenario) -> bool:
    return bool(np.isclose(sc.gamma, 0.9 * sc.n_active / sc.n_sub, rtol=1e-12, atol=0.0))


def export_name(label: str, m1: int, m2: int) -> str:
    kind = "auto" if m1 == m2 else "cross"
    return f"{label}__{corr.pair_label(m1, m2)}__{kind}.csv"


def export_run(run: Run, out_dir, ref: float | None = None) -> dict[str, str]:
    """Write one CSV per ordered BS pair; returns ``{pair: filename}``."""
    out_dir = Path(out_dir)
    p = run.profile
    written = {}
    for m1 in range(p.m_bs):
        for m2 in range(p.m_bs):
            name = export_name(run.label, m1, m2)
            corr.write_profile_csv(p, out_dir / name, pairs=[(m1, m2)], ref=ref)
            written[corr.pair_label(m1, m2)] = name
    return written


def write_report(report: ComparisonReport, runs: list[Run], out_dir, name="report.json") -> Path:
    out_dir = Path(out_dir)
    by_label = {r.label: r for r in runs}
    for entry in report.entries:
        entry.exports = export_run(by_label[entry.label], out_dir)
    return atomic_write_text(out_dir / name, report.to_json())


def summary_table(rows: list[tuple[str, corr.SidelobeMetrics]]) -> str:
    """Plain-text table of the headline metrics."""
    head = f"{'run':<24}{'ISL obj':>12}{'PSL auto dB':>13}{'PSL cross dB':>14}{'mainlobe':>10}  PAPR per BS"
    lines = [head, "-" * len(head)]
    for label, m in rows:
        cross = "n/a" if m.psl_cross_db is None else f"{m.psl_cross_db:.2f}"
        papr = ", ".join(f"{v:.3f}" for v in m.papr_per_bs)
        lines.append(
            f"{label:<24}{m.isl_objective:>12.4e}{m.psl_auto_db:>13.2f}{cross:>14}"
            f"{m.mainlobe_gain:>10.4f}  {papr}"
        )
    return "\n".join(lines) + "\n"
