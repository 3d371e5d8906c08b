"""Render a quality report to files: JSON, CSV, and a summary figure."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .quality import QualityReport, report_to_json

REPORT_JSON = "report.json"
FRAME_CSV = "frame_scores.csv"
FIGURE_PNG = "quality.png"


def write_frame_csv(report: QualityReport, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["frame", "cpbd"])
        for score in report.frame_scores:
            writer.writerow([score.frame_index, f"{score.cpbd:.6f}"])


def render_figure(report: QualityReport, path: Path) -> None:
    """Per-frame sharpness curve plus a bar per normalized metric."""
    if report.normalized:
        fig, (ax_frames, ax_metrics) = plt.subplots(
            1, 2, figsize=(9, 3.4), gridspec_kw={"width_ratios": [3, 2]}
        )
    else:
        fig, ax_frames = plt.subplots(figsize=(6.5, 3.4))
        ax_metrics = None

    indices = [s.frame_index for s in report.frame_scores]
    values = [s.cpbd for s in report.frame_scores]
    if indices:
        ax_frames.plot(indices, values, marker="o", markersize=3, linewidth=1.2)
    ax_frames.axhline(report.cpbd_mean, linestyle="--", linewidth=1.0, color="tab:red")
    ax_frames.set_xlabel("frame")
    ax_frames.set_ylabel("CPBD")
    ax_frames.set_ylim(-0.05, 1.05)
    ax_frames.set_title(f"sharpness per frame (mean {report.cpbd_mean:.4f})")

    if ax_metrics is not None:
        names = list(report.normalized)
        scores = [report.normalized[n] for n in names]
        ax_metrics.bar(range(len(names)), scores, color="tab:blue")
        ax_metrics.set_xticks(range(len(names)))
        ax_metrics.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
        ax_metrics.set_ylim(0.0, 1.05)
        ax_metrics.set_title("normalized metrics")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_files(report: QualityReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, frame_scores.csv, and quality.png into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / REPORT_JSON,
        "csv": out / FRAME_CSV,
        "figure": out / FIGURE_PNG,
    }
    paths["json"].write_bytes(report_to_json(report))
    write_frame_csv(report, paths["csv"])
    render_figure(report, paths["figure"])
    return paths
