"""Risk report rows, verdicts and rendering."""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from . import __version__


logger = logging.getLogger(__name__)

SCHEMA = "mpls-risk-report/1"
SIGNIFICANT_DIGITS = 12
COMPARE_SLACK = 1e-12


class Verdict(str, Enum):
    CONSISTENT = "CONSISTENT"
    DIVERGENT = "DIVERGENT"
    ANALYTIC_ONLY = "ANALYTIC_ONLY"
    EMPIRICAL_ONLY = "EMPIRICAL_ONLY"
    NO_DATA = "NO_DATA"


@dataclass
class MetricRow:
    """One reported quantity.

    `samples` is None for rows with no empirical counterpart at all; a row
    with an empirical counterpart but no observations has `samples == 0`.
    """

    id: str
    formula: str
    analytic: Optional[float] = None
    empirical: Optional[float] = None
    half_width: Optional[float] = None
    samples: Optional[int] = None
    note: Optional[str] = None

    @property
    def analytic_only(self) -> bool:
        return self.samples is None


@dataclass
class RiskReport:
    rows: List[MetricRow] = field(default_factory=list)
    counters: Optional[Dict[str, Any]] = None

    def row(self, metric_id: str) -> MetricRow:
        for row in self.rows:
            if row.id == metric_id:
                return row
        raise KeyError(metric_id)

    @property
    def metric_ids(self) -> List[str]:
        return [row.id for row in self.rows]


def verdict_for(row: MetricRow) -> Verdict:
    if row.analytic_only:
        return Verdict.ANALYTIC_ONLY
    if row.samples == 0 or row.empirical is None:
        return Verdict.NO_DATA
    if row.analytic is None:
        return Verdict.EMPIRICAL_ONLY
    tolerance = (row.half_width or 0.0) + COMPARE_SLACK
    if abs(row.empirical - row.analytic) <= tolerance:
        return Verdict.CONSISTENT
    return Verdict.DIVERGENT


def compare(report: RiskReport) -> Dict[str, Verdict]:
    """Verdict per metric id, in report order."""
    verdicts = {row.id: verdict_for(row) for row in report.rows}
    divergent = [metric for metric, v in verdicts.items() if v == Verdict.DIVERGENT]
    if divergent:
        logger.warning(f"Divergent metrics: {', '.join(divergent)}")
    return verdicts


def round_significant(value: Any) -> Any:
    """Round floats to 12 significant digits; recurse into containers."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): round_significant(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_significant(v) for v in value]
    return value


@dataclass
class ReportDocument:
    command: str
    scenario_digest: str
    report: RiskReport
    verdicts: Dict[str, Verdict]
    simulation: Optional[Dict[str, Any]] = None
    format: str = "json"
    tool_version: str = __version__

    @property
    def divergent(self) -> bool:
        return any(v == Verdict.DIVERGENT for v in self.verdicts.values())

    def summary(self) -> Dict[str, int]:
        counts = {verdict.value: 0 for verdict in Verdict}
        for verdict in self.verdicts.values():
            counts[verdict.value] += 1
        return counts

    def payload(self) -> Dict[str, Any]:
        metrics = [
            {
                "id": row.id,
                "formula": row.formula,
                "analytic": row.analytic,
                "empirical": row.empirical,
                "half_width": row.half_width,
                "samples": row.samples,
                "verdict": self.verdicts[row.id].value,
                "note": row.note,
            }
            for row in self.report.rows
        ]
        data = {
            "schema": SCHEMA,
            "format": self.format,
            "tool_version": self.tool_version,
            "command": self.command,
            "scenario_digest": self.scenario_digest,
            "metrics": metrics,
            "summary": self.summary(),
        }
        if self.simulation is not None:
            data["simulation"] = self.simulation
        if self.report.counters is not None:
            data["counters"] = self.report.counters
        return round_significant(data)


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}" if value == 0 or abs(value) >= 1e-4 else f"{value:.6e}"
    return str(value)


def _render_text(doc: ReportDocument) -> str:
    payload = doc.payload()
    headers = ["metric", "analytic", "empirical", "half_width", "samples", "verdict"]
    table = [headers]
    for metric in payload["metrics"]:
        table.append([_cell(metric[key]) if key != "metric" else metric["id"] for key in headers])

    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = [
        f"MPLS risk report ({payload['command']}) - tool {payload['tool_version']}",
        f"scenario digest: {payload['scenario_digest']}",
    ]
    if "simulation" in payload:
        sim = payload["simulation"]
        lines.append(
            f"seed {sim['seed']}, trials {sim['trials']}, horizon {_cell(sim['horizon'])}, warmup {_cell(sim['warmup'])}"
        )
    lines.append("")
    for index, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))

    notes = [(m["id"], m["note"]) for m in payload["metrics"] if m["note"]]
    if notes:
        lines.append("")
        lines.extend(f"note {metric}: {note}" for metric, note in notes)

    summary = payload["summary"]
    lines.append("")
    lines.append(", ".join(f"{name.lower()} {count}" for name, count in summary.items()))
    return "\n".join(lines) + "\n"


def render_report(doc: ReportDocument, format: str = "json") -> str:
    """Render a report document as JSON (stable schema) or an aligned text table."""
    if format == "json":
        return json.dumps(doc.payload(), sort_keys=True, indent=2) + "\n"
    if format == "text":
        return _render_text(doc)
    raise ValueError(f"Unknown report format {format!r}")
