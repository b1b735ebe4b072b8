"""Consolidated run reports: one row per (embedder, pair type),
rendered as markdown and CSV from the eval reports found in a run
directory."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import NoData
from .jsonio import write_text

CSV_COLUMNS = ("embedder_id", "pair_type", "correct", "incorrect",
               "tie", "skipped", "accuracy")


def collect_reports(run_dir: Path) -> list[dict]:
    """Every JSON file under run_dir that looks like an eval report."""
    run_dir = Path(run_dir)
    reports = []
    for path in sorted(run_dir.rglob("*.json")):
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(obj, dict) and "embedder_id" in obj and "per_type" in obj:
            reports.append(obj)
    return reports


def consolidated_rows(reports: list[dict]) -> list[dict]:
    rows = []
    for report in sorted(reports, key=lambda r: r.get("embedder_id", "")):
        embedder = report.get("embedder_id", "")
        for pair_type in sorted(report["per_type"]):
            counts = report["per_type"][pair_type]
            rows.append({
                "embedder_id": embedder, "pair_type": pair_type,
                "correct": counts.get("correct", 0),
                "incorrect": counts.get("incorrect", 0),
                "tie": counts.get("tie", 0),
                "skipped": counts.get("skipped", 0),
                "accuracy": counts.get("accuracy", 0.0),
            })
    return rows


def rows_csv(rows: list[dict]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            value = row[col]
            cells.append(repr(value) if isinstance(value, float) else str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def rows_markdown(rows: list[dict]) -> str:
    out = ["# Candidate-pair selection results", "",
           "Accuracy = correct / (correct + incorrect + tie); "
           "ties never count as correct.", "",
           "| embedder | pair type | correct | incorrect | tie | skipped | accuracy |",
           "|---|---|---:|---:|---:|---:|---:|"]
    for row in rows:
        out.append("| {embedder_id} | {pair_type} | {correct} | {incorrect} "
                   "| {tie} | {skipped} | {acc:.4f} |".format(
                       acc=row["accuracy"], **{k: row[k] for k in CSV_COLUMNS[:-1]}))
    out.append("")
    return "\n".join(out)


def write_consolidated(run_dir: Path, out_dir: Path | None = None) -> dict:
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    reports = collect_reports(run_dir)
    if not reports:
        raise NoData(f"no eval reports under {run_dir}")
    rows = consolidated_rows(reports)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_text(out_dir / "report.csv", rows_csv(rows))
    write_text(out_dir / "report.md", rows_markdown(rows))
    return {"reports": len(reports), "rows": len(rows),
            "csv": str(out_dir / "report.csv"), "markdown": str(out_dir / "report.md")}
