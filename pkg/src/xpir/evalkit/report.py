"""Report rendering: CSV, aligned text tables, and figures.

The delimited and plain-text outputs are byte-deterministic for a fixed
experiment seed; figures are rendered alongside them as PNG files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .experiment import ExperimentReport, RequestRow

_CSV_COLUMNS = [
    "phase", "configuration", "user", "instant", "query_id", "concept",
    "precision", "recall", "f1", "retrieved", "relevant", "hits",
]


def report_csv(report: ExperimentReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([
            row.phase, row.configuration, row.user_id, row.instant,
            row.query_id, row.concept,
            f"{row.precision:.6f}", f"{row.recall:.6f}", f"{row.f1:.6f}",
            row.retrieved, row.relevant, row.hits,
        ])
    for configuration in ("baseline", "proposed"):
        m = report.means[configuration]
        writer.writerow([
            "summary", configuration, "", "", "mean", "",
            f"{m['precision']:.6f}", f"{m['recall']:.6f}", f"{m['f1']:.6f}",
            "", "", "",
        ])
    return buffer.getvalue()


def _comparison_table(report: ExperimentReport) -> list[str]:
    by_query: dict[str, dict[str, RequestRow]] = {}
    for row in report.rows_for("comparison"):
        by_query.setdefault(row.query_id, {})[row.configuration] = row
    width = max([len("request")] + [len(q) for q in by_query])
    lines = [
        "Per-request comparison (document level)",
        f"{'request':<{width}}  {'rel':>4}  | {'P':>6} {'R':>6}  returned/hits | {'P':>6} {'R':>6}  returned/hits",
        f"{'':<{width}}  {'':>4}  | {'baseline':^22} | {'proposed':^22}",
    ]
    for query_id, rows in by_query.items():
        base, prop = rows["baseline"], rows["proposed"]
        lines.append(
            f"{query_id:<{width}}  {base.relevant:>4}  "
            f"| {base.precision:>6.3f} {base.recall:>6.3f}  {base.retrieved:>5}/{base.hits:<5} "
            f"| {prop.precision:>6.3f} {prop.recall:>6.3f}  {prop.retrieved:>5}/{prop.hits:<5}"
        )
    mb, mp = report.means["baseline"], report.means["proposed"]
    rb = report.reference_means["baseline"]
    rp = report.reference_means["proposed"]
    lines.append("")
    lines.append(
        f"{'mean':<{width}}  {'':>4}  "
        f"| {mb['precision']:>6.3f} {mb['recall']:>6.3f}  {'':<11} "
        f"| {mp['precision']:>6.3f} {mp['recall']:>6.3f}"
    )
    lines.append(
        f"{'reference means':<{width}}        "
        f"| {rb['precision']:>6.3f} {rb['recall']:>6.3f}  {'':<11} "
        f"| {rp['precision']:>6.3f} {rp['recall']:>6.3f}"
    )
    return lines


def _adaptation_table(report: ExperimentReport) -> list[str]:
    rows = report.rows_for("adaptation")
    if not rows:
        return []
    users = sorted({row.user_id for row in rows})
    instants = list(dict.fromkeys(row.instant for row in rows))
    by_cell = {(row.user_id, row.instant): row for row in rows}
    concept_width = max(len(by_cell[(users[0], i)].concept) for i in instants)
    header = f"{'instant':<8} {'request':<{concept_width}}"
    for user in users:
        header += f" | {user:^20}"
    sub = f"{'':<8} {'':<{concept_width}}"
    for _ in users:
        sub += f" | {'R':>6} {'P':>6} {'F1':>6}"
    lines = ["Users by instants (proposed configuration)", header, sub]
    for instant in instants:
        line = f"{instant:<8} {by_cell[(users[0], instant)].concept:<{concept_width}}"
        for user in users:
            row = by_cell[(user, instant)]
            line += f" | {row.recall:>6.2f} {row.precision:>6.2f} {row.f1:>6.4f}"
        lines.append(line)
    lines.append("")
    means_line = f"{'mean':<8} {'':<{concept_width}}"
    for user in users:
        m = report.user_means[user]
        means_line += f" | {m['recall']:>6.2f} {m['precision']:>6.2f} {m['f1']:>6.4f}"
    lines.append(means_line)
    return lines


def report_text(report: ExperimentReport) -> str:
    lines = [
        "Retrieval evaluation report",
        "===========================",
        "",
        "corpus: {documents} documents, {element_nodes} element nodes, "
        "{text_nodes} text nodes, {queries} queries".format(**report.corpus_summary),
        f"seed: {report.config.seed}",
        "",
    ]
    lines.extend(_comparison_table(report))
    adaptation = _adaptation_table(report)
    if adaptation:
        lines.append("")
        lines.extend(adaptation)
    lines.append("")
    return "\n".join(lines)


def render_figures(report: ExperimentReport, directory: str | Path) -> list[Path]:
    """Render comparison and adaptation figures as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    # Mean precision/recall per configuration.
    fig, ax = plt.subplots(figsize=(6, 4))
    metrics = ("precision", "recall", "f1")
    xs = range(len(metrics))
    width = 0.35
    for offset, configuration in ((-width / 2, "baseline"), (width / 2, "proposed")):
        values = [report.means[configuration][m] for m in metrics]
        ax.bar([x + offset for x in xs], values, width, label=configuration)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(metrics)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean over requests")
    ax.set_title("Unweighted baseline vs weighted + personalized")
    ax.legend()
    fig.tight_layout()
    path = directory / "config_comparison.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    # Per-request precision under both configurations.
    comparison = report.rows_for("comparison")
    queries = list(dict.fromkeys(row.query_id for row in comparison))
    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(queries)), 4))
    for configuration, marker in (("baseline", "o"), ("proposed", "s")):
        values = [
            next(r.precision for r in comparison
                 if r.query_id == q and r.configuration == configuration)
            for q in queries
        ]
        ax.plot(range(len(queries)), values, marker=marker, label=configuration)
    ax.set_xticks(range(len(queries)))
    ax.set_xticklabels(queries, rotation=90, fontsize=7)
    ax.set_ylabel("precision")
    ax.set_ylim(0, 1.05)
    ax.set_title("Per-request precision")
    ax.legend()
    fig.tight_layout()
    path = directory / "per_request_precision.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    # F1 across instants per user.
    adaptation = report.rows_for("adaptation")
    if adaptation:
        users = sorted({row.user_id for row in adaptation})
        instants = list(dict.fromkeys(row.instant for row in adaptation))
        fig, ax = plt.subplots(figsize=(6, 4))
        for user in users:
            values = [
                next(r.f1 for r in adaptation if r.user_id == user and r.instant == i)
                for i in instants
            ]
            ax.plot(instants, values, marker="o", label=user)
        ax.set_ylabel("F1")
        ax.set_ylim(0, 1.05)
        ax.set_title("Per-user F1 across instants")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = directory / "user_instants_f1.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    return written


def write_report(
    report: ExperimentReport,
    directory: str | Path,
    *,
    figures: bool = True,
) -> dict[str, Path]:
    """Write report.csv, report.txt, and (optionally) figures/*.png."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    csv_path = directory / "report.csv"
    csv_path.write_text(report_csv(report), "utf-8")
    outputs["csv"] = csv_path
    text_path = directory / "report.txt"
    text_path.write_text(report_text(report), "utf-8")
    outputs["text"] = text_path
    if figures:
        for path in render_figures(report, directory / "figures"):
            outputs[path.stem] = path
    return outputs
