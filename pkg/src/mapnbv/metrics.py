"""Comparison metrics and reproduction of the bundled reference tables.

Improvement between two point counts is the symmetric percent difference
100 (a - b) / ((a + b) / 2): it reproduces every improvement cell of the
bundled reference tables, which a plain (a - b) / b does not.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .errors import MapNbvError


def improvement(a: float, b: float) -> float:
    """Symmetric percent difference of two counts; antisymmetric exactly."""
    if a < 0 or b < 0:
        raise ValueError("counts must be non-negative")
    if a + b == 0:
        raise MapNbvError("improvement undefined for two zero counts")
    return 100.0 * (a - b) / ((a + b) / 2.0)


@dataclass(frozen=True)
class ComparisonRow:
    class_label: str
    model: str
    points_a: int
    points_b: int
    improvement_percent: float  # recomputed, rounded half-even to 2 decimals

    @classmethod
    def build(cls, class_label, model, points_a, points_b) -> "ComparisonRow":
        return cls(
            class_label=class_label,
            model=model,
            points_a=int(points_a),
            points_b=int(points_b),
            improvement_percent=round(improvement(int(points_a), int(points_b)), 2),
        )


@dataclass(frozen=True)
class TableCheck:
    name: str
    rows: list
    reported: list
    mean_recomputed: float
    mean_reported: float

    @property
    def max_cell_error(self) -> float:
        return max(
            abs(row.improvement_percent - rep) for row, rep in zip(self.rows, self.reported)
        )


_TABLE_FILES = (
    ("first_iteration", "first_iteration_comparison.csv", "points_pred_nbv"),
    ("termination", "termination_comparison.csv", "points_frontier"),
)


def _load_table(filename: str, b_column: str):
    text = resources.files("mapnbv.data").joinpath(filename).read_text()
    rows = list(csv.DictReader(text.splitlines()))
    comparison = [
        ComparisonRow.build(r["class"], r["model"], r["points_map_nbv"], r[b_column])
        for r in rows
    ]
    reported = [float(r["reported_improvement"]) for r in rows]
    return comparison, reported


def reproduce_tables() -> dict[str, TableCheck]:
    """Recompute every improvement cell of both bundled comparison tables.

    Returns one check per table carrying the recomputed rows, the reference
    values, and both means.
    """
    out = {}
    for name, filename, b_column in _TABLE_FILES:
        rows, reported = _load_table(filename, b_column)
        mean_re = sum(r.improvement_percent for r in rows) / len(rows)
        mean_rep = sum(reported) / len(reported)
        out[name] = TableCheck(
            name=name,
            rows=rows,
            reported=reported,
            mean_recomputed=round(mean_re, 2),
            mean_reported=round(mean_rep, 2),
        )
    return out


def format_tables(checks: dict[str, TableCheck]) -> str:
    lines = []
    titles = {
        "first_iteration": "Points after the first planned views (joint vs single-agent)",
        "termination": "Points at termination (joint vs multi-agent frontier baseline)",
    }
    for name, check in checks.items():
        lines.append(titles.get(name, name))
        lines.append(f"{'class':<12}{'model':<14}{'a':>8}{'b':>8}{'improvement':>13}{'reference':>11}")
        for row, rep in zip(check.rows, check.reported):
            lines.append(
                f"{row.class_label:<12}{row.model:<14}{row.points_a:>8}{row.points_b:>8}"
                f"{row.improvement_percent:>12.2f}%{rep:>10.2f}%"
            )
        lines.append(
            f"mean improvement: recomputed {check.mean_recomputed:.2f}% "
            f"(reference {check.mean_reported:.2f}%), max cell error {check.max_cell_error:.4f}"
        )
        lines.append("")
    return "\n".join(lines)
