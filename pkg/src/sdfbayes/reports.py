"""Report emission for aggregated experiment results: CSV, JSON, markdown."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .simulate import ArmReport, RunResult

CSV_COLUMNS = ("scenario", "algorithm", "safety_viol", "safety_ci",
               "err_rate", "err_ci", "dlt_rate", "dlt_ci")
FORMATS = ("csv", "json", "md")


def write_csv(reports: list[ArmReport], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for report in reports:
            row = report.csv_row()
            writer.writerow({k: f"{v:.6f}" if isinstance(v, float) else v
                             for k, v in row.items()})
    return path


def report_dict(report: ArmReport) -> dict:
    d = report.csv_row()
    d.update(
        runs=report.runs,
        terminated_rate=report.terminated_rate,
        group_viol=list(report.group_viol),
        group_viol_ci=list(report.group_viol_ci),
        group_err=list(report.group_err),
        group_err_ci=list(report.group_err_ci),
        group_recruit=list(report.group_recruit),
        group_recruit_ci=list(report.group_recruit_ci),
        allocation=None if report.allocation is None else report.allocation.tolist(),
    )
    return d


def write_json(reports: list[ArmReport], path) -> Path:
    path = Path(path)
    path.write_text(json.dumps([report_dict(r) for r in reports], indent=2) + "\n")
    return path


def _cell(rate: float, hw: float) -> str:
    return f"{rate:.3f}±{hw:.3f}"


def write_markdown(reports: list[ArmReport], path) -> Path:
    """Pivot tables (algorithm rows x scenario columns) when the suite is a
    grid, otherwise one flat table."""
    path = Path(path)
    scenarios = list(dict.fromkeys(r.scenario for r in reports))
    algorithms = list(dict.fromkeys(r.algorithm for r in reports))
    lines: list[str] = []
    if len(scenarios) > 1 and len(algorithms) > 1:
        by_key = {(r.algorithm, r.scenario): r for r in reports}
        for title, rate_of, hw_of in (
            ("Safety violation rate", lambda r: r.safety_viol, lambda r: r.safety_ci),
            ("Recommendation error rate", lambda r: r.err_rate, lambda r: r.err_ci),
            ("DLT rate", lambda r: r.dlt_rate, lambda r: r.dlt_ci),
        ):
            lines.append(f"## {title}")
            lines.append("")
            lines.append("| algorithm | " + " | ".join(scenarios) + " |")
            lines.append("|---" * (len(scenarios) + 1) + "|")
            for algo in algorithms:
                cells = []
                for sc in scenarios:
                    r = by_key.get((algo, sc))
                    cells.append(_cell(rate_of(r), hw_of(r)) if r else "")
                lines.append(f"| {algo} | " + " | ".join(cells) + " |")
            lines.append("")
    else:
        lines.append("| scenario | algorithm | safety viol | error rate | DLT rate |")
        lines.append("|---|---|---|---|---|")
        for r in reports:
            lines.append(
                f"| {r.scenario} | {r.algorithm} | {_cell(r.safety_viol, r.safety_ci)}"
                f" | {_cell(r.err_rate, r.err_ci)} | {_cell(r.dlt_rate, r.dlt_ci)} |")
        lines.append("")
    path.write_text("\n".join(lines))
    return path


def write_heatmap_csv(report: ArmReport, path) -> Path:
    """Mean allocation fractions as a J-row, K-column CSV matrix."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in report.allocation:
            writer.writerow([f"{x:.6f}" for x in row])
    return path


def emit_report(reports: list[ArmReport], fmt: str, path) -> Path:
    if fmt == "csv":
        return write_csv(reports, path)
    if fmt == "json":
        return write_json(reports, path)
    if fmt == "md":
        return write_markdown(reports, path)
    raise ValueError(f"unknown format {fmt!r}; choices: {', '.join(FORMATS)}")


def run_log_dict(result: RunResult) -> dict:
    """One JSON-lines record per run for --log-decisions output."""
    return {
        "scenario": result.scenario,
        "algorithm": result.algorithm,
        "seed": result.seed,
        "recommendations": [list(r) if r else None for r in result.recommendations],
        "errorFlags": list(map(bool, result.error_flags)),
        "violation": bool(result.violation),
        "dltRate": result.dlt_rate,
        "enrolled": result.enrolled,
        "terminatedEarly": bool(result.terminated_early),
    }


def group_report(result: RunResult) -> dict:
    """Per-group trial report for heterogeneous runs."""
    groups = []
    for m in range(len(result.recommendations)):
        rec = result.recommendations[m]
        stopped = result.stopped_rounds[m] if result.stopped_rounds else None
        groups.append({
            "group": m,
            "recommendation": list(rec) if rec else None,
            "errorFlag": bool(result.error_flags[m]),
            "dltRate": result.group_dlt_rates[m],
            "patientCount": int(result.allocation[m].sum()),
            "stoppedAtRound": stopped,
        })
    return {"groups": groups, "entireDltRate": result.dlt_rate}
