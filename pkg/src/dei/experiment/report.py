"""Result aggregation: CSV tables and SVG plots from run directories.

Reports are a pure function of run-directory contents; each run directory
is one condition run over several trial seeds by the runner.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .spec import ExperimentSpec, load_spec

ABSENT = "—"  # em dash marks undefined table entries

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class ReportError(ValueError):
    """Raised when run directories cannot be aggregated."""


@dataclass
class TrialData:
    trial_seed: int
    generality: dict[str, list[float | None]]
    merged_rounds: list[dict]
    novelty_values: list[float]

    @property
    def peak_generality(self) -> float | None:
        values = [v for curve in self.generality.values()
                  for v in curve if v is not None]
        return max(values) if values else None

    @property
    def mean_novelty(self) -> float | None:
        if not self.novelty_values:
            return None
        return statistics.fmean(self.novelty_values)

    def generality_curve(self) -> list[float | None]:
        """Per-round generality averaged over nodes, None where undefined."""
        rounds = max(len(c) for c in self.generality.values())
        curve: list[float | None] = []
        for r in range(rounds):
            values = [c[r] for c in self.generality.values()
                      if r < len(c) and c[r] is not None]
            curve.append(statistics.fmean(values) if values else None)
        return curve


@dataclass
class RunData:
    spec: ExperimentSpec
    trials: list[TrialData]

    @property
    def operators(self) -> str:
        return "+".join(sorted({n.operator.identity for n in self.spec.nodes}))

    @property
    def label(self) -> str:
        return f"{self.spec.condition} ({self.operators})"


def load_run(run_dir: str | Path) -> RunData:
    root = Path(run_dir)
    spec_path = root / "experiment.json"
    if not spec_path.exists():
        raise ReportError(f"{root}: no experiment.json; not a run directory")
    spec = load_spec(spec_path)
    trials = []
    for trial_dir in sorted(root.glob("trial-*"),
                            key=lambda p: int(p.name.split("-", 1)[1])):
        data = json.loads((trial_dir / "trial.json").read_text())
        novelty = []
        for node_dir in sorted(trial_dir.glob("node-*")):
            for line in (node_dir / "rounds.jsonl").read_text().splitlines():
                value = json.loads(line).get("niche_novelty")
                if value is not None:
                    novelty.append(value)
        trials.append(TrialData(
            trial_seed=data["trial_seed"],
            generality=data["generality"],
            merged_rounds=data["merged_rounds"],
            novelty_values=novelty,
        ))
    if not trials:
        raise ReportError(f"{root}: no completed trials")
    return RunData(spec=spec, trials=trials)


def _mean_std(values: list[float]) -> tuple[str, str]:
    if not values:
        return ABSENT, ABSENT
    mean = f"{statistics.fmean(values):.6f}"
    std = f"{statistics.stdev(values):.6f}" if len(values) >= 2 else ABSENT
    return mean, std


def write_summary_csv(runs: list[RunData], path: str | Path) -> None:
    """One row per condition and metric, mean and sample std across trials."""
    rows = []
    for run in runs:
        peaks = [t.peak_generality for t in run.trials
                 if t.peak_generality is not None]
        novelties = [t.mean_novelty for t in run.trials
                     if t.mean_novelty is not None]
        for metric, values in (("peak_generality", peaks),
                               ("niche_novelty", novelties)):
            mean, std = _mean_std(values)
            rows.append({
                "condition": run.spec.condition,
                "operators": run.operators,
                "metric": metric,
                "mean": mean,
                "std": std,
                "trials": len(run.trials),
            })
    _write_csv(path, rows,
               ("condition", "operators", "metric", "mean", "std", "trials"))


def write_merged_csv(runs: list[RunData], path: str | Path) -> None:
    """Final-round merged archive per condition: coverage and qd score."""
    rows = []
    for run in runs:
        coverage = [t.merged_rounds[-1]["coverage"] for t in run.trials
                    if t.merged_rounds]
        qd = [t.merged_rounds[-1]["qd_score"] for t in run.trials
              if t.merged_rounds]
        cov_mean, cov_std = _mean_std(coverage)
        qd_mean, qd_std = _mean_std(qd)
        rows.append({
            "condition": run.spec.condition,
            "operators": run.operators,
            "coverage_mean": cov_mean,
            "coverage_std": cov_std,
            "qd_score_mean": qd_mean,
            "qd_score_std": qd_std,
            "trials": len(run.trials),
        })
    _write_csv(path, rows,
               ("condition", "operators", "coverage_mean", "coverage_std",
                "qd_score_mean", "qd_score_std", "trials"))


def _write_csv(path: str | Path, rows: list[dict], fields: tuple) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields))
        writer.writeheader()
        writer.writerows(rows)


def _mean_curve(curves: list[list[float | None]]) -> list[float | None]:
    length = max(len(c) for c in curves)
    out: list[float | None] = []
    for r in range(length):
        values = [c[r] for c in curves if r < len(c) and c[r] is not None]
        out.append(statistics.fmean(values) if values else None)
    return out


def generality_series(runs: list[RunData]) -> list[tuple[str, list]]:
    series = []
    for run in runs:
        curve = _mean_curve([t.generality_curve() for t in run.trials])
        points = [(r + 1, v) for r, v in enumerate(curve) if v is not None]
        series.append((run.label, points))
    return series


def merged_qd_series(runs: list[RunData]) -> list[tuple[str, list]]:
    series = []
    for run in runs:
        curve = _mean_curve(
            [[m["qd_score"] for m in t.merged_rounds] for t in run.trials])
        points = [(r + 1, v) for r, v in enumerate(curve) if v is not None]
        series.append((run.label, points))
    return series


def write_line_svg(path: str | Path, series: list[tuple[str, list]],
                   title: str, x_label: str, y_label: str) -> None:
    """Minimal line plot: axes, ticks, one polyline per labelled series."""
    width, height = 640, 400
    left, right, top, bottom = 60, 200, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom

    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    if not xs:
        xs, ys = [0, 1], [0, 1]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" '
                 f'y2="{top + plot_h}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top + plot_h}" '
                 f'x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>')
    ticks = 5
    for i in range(ticks + 1):
        xv = x_lo + (x_hi - x_lo) * i / ticks
        yv = y_lo + (y_hi - y_lo) * i / ticks
        px, py = sx(xv), sy(yv)
        parts.append(f'<line x1="{px:.1f}" y1="{top + plot_h}" x2="{px:.1f}" '
                     f'y2="{top + plot_h + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{top + plot_h + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{xv:.1f}</text>')
        parts.append(f'<line x1="{left - 5}" y1="{py:.1f}" x2="{left}" '
                     f'y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{py + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{yv:.2f}</text>')
    parts.append(f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{x_label}</text>')
    parts.append(f'<text x="16" y="{top + plot_h / 2:.1f}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12" transform="rotate(-90 16 '
                 f'{top + plot_h / 2:.1f})">{y_label}</text>')

    for idx, (label, points) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        if points:
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="2"/>')
            for x, y in points:
                parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" '
                             f'r="2.5" fill="{color}"/>')
        ly = top + 14 + 18 * idx
        lx = left + plot_w + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 26}" y="{ly}" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_report(run_dirs: list[str | Path],
                 out_dir: str | Path) -> list[Path]:
    """Aggregate one or more run directories into tables and plots."""
    if not run_dirs:
        raise ReportError("no run directories given")
    runs = [load_run(d) for d in run_dirs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.csv", out / "merged.csv",
             out / "generality_vs_round.svg", out / "merged_qd_vs_round.svg"]
    write_summary_csv(runs, paths[0])
    write_merged_csv(runs, paths[1])
    write_line_svg(paths[2], generality_series(runs),
                   "Champion generality vs round", "round", "generality")
    write_line_svg(paths[3], merged_qd_series(runs),
                   "Merged archive QD score vs round", "round", "qd score")
    return paths
