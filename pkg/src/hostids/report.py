"""File reports for replay and advise runs: delimited data plus figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .acquisition import METHOD_LABELS, MethodTable
from .engine import ReplayResult
from .unified import StageOutput


def _alert_row(alert) -> list:
    if isinstance(alert.output, StageOutput):
        kind, stage, oos = "Stage", alert.output.stage, alert.output.out_of_sequence
    else:
        kind, stage, oos = alert.output.value, "", ""
    trigger = alert.trigger if isinstance(alert.trigger, str) else " ".join(alert.trigger)
    return [alert.event_index, alert.ts, alert.subject, kind, stage, oos, trigger, alert.post_halt]


def write_replay_report(result: ReplayResult, out_dir: str | Path) -> list[Path]:
    """Write alerts.csv, stage_timeline.png, verdict_counts.png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out / "alerts.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["event_index", "ts", "subject", "kind", "stage", "out_of_sequence", "trigger", "post_halt"]
        )
        for alert in result.alerts:
            writer.writerow(_alert_row(alert))
    written.append(csv_path)

    stage_alerts = [a for a in result.alerts if isinstance(a.output, StageOutput)]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if stage_alerts:
        stages = sorted({a.output.stage for a in stage_alerts})
        order = {s: i for i, s in enumerate(stages)}
        subjects = sorted({a.subject for a in stage_alerts})
        for subject in subjects:
            points = [a for a in stage_alerts if a.subject == subject]
            ax.plot(
                [a.event_index for a in points],
                [order[a.output.stage] for a in points],
                marker="o",
                linestyle="-",
                label=subject,
            )
        ax.set_yticks(range(len(stages)))
        ax.set_yticklabels(stages)
        ax.legend(title="subject", fontsize="small")
    else:
        ax.text(0.5, 0.5, "no stage alerts", ha="center", va="center", transform=ax.transAxes)
        ax.set_yticks([])
    ax.set_xlabel("event index")
    ax.set_ylabel("attack stage")
    ax.set_title("Stage progression across the replay")
    fig.tight_layout()
    timeline_path = out / "stage_timeline.png"
    fig.savefig(timeline_path, dpi=120)
    plt.close(fig)
    written.append(timeline_path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = list(result.summary)
    ax.bar(range(len(keys)), [result.summary[k] for k in keys], color="#4878a8")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=20, ha="right", fontsize="small")
    ax.set_ylabel("count")
    ax.set_title("Replay summary")
    fig.tight_layout()
    counts_path = out / "verdict_counts.png"
    fig.savefig(counts_path, dpi=120)
    plt.close(fig)
    written.append(counts_path)
    return written


def write_advise_report(
    rankings: Sequence[tuple[str, float]],
    table: MethodTable,
    weights: Mapping[str, float],
    out_dir: str | Path,
) -> list[Path]:
    """Write scores.csv and method_scores.png for one advisor run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    weighted = [c for c in table.criteria if weights.get(c, 0) > 0]

    csv_path = out / "scores.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "score", *weighted])
        for method, score in rankings:
            cells = [table.cell(c, method).name.capitalize() for c in weighted]
            writer.writerow([method, score, *cells])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    names = [METHOD_LABELS.get(m, m) for m, _ in rankings]
    scores = [score for _, score in rankings]
    colors = ["#3f8f4f" if s > 0 else "#b04a4a" if s < 0 else "#8a8a8a" for s in scores]
    ax.bar(range(len(names)), scores, color=colors)
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize="small")
    ax.set_ylabel("weighted score")
    ax.set_title("Acquisition method ranking")
    fig.tight_layout()
    png_path = out / "method_scores.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    written.append(png_path)
    return written
