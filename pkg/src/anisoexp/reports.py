"""CSV writers with fixed 17-significant-digit formatting.

Each file starts with the resolved configuration as ``#`` comment lines, so
identical configurations give byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import RateReport
from .assembly import NodalField

__all__ = ["fmt", "write_csv", "sweep_rows", "nodal_rows", "write_sweep_report", "write_nodal"]


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    path = Path(path)
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def sweep_rows(report: RateReport) -> list[list]:
    """One row per eps, then the slope/theory/verdict footer rows."""
    rows = [[e, a, b] for e, a, b in zip(report.eps_values, report.seminorm_x2, report.seminorm_x1)]
    rows += [
        ["slopeX2", report.slope_x2, ""],
        ["slopeX1", report.slope_x1, ""],
        ["theoryX2", report.theory_x2, ""],
        ["theoryX1", report.theory_x1, ""],
        ["verdict", report.verdict, ""],
    ]
    return rows


def write_sweep_report(path, report: RateReport, comments: Sequence[str] = ()) -> Path:
    return write_csv(path, ["eps", "seminormX2", "seminormX1"], sweep_rows(report), comments)


def nodal_rows(field: NodalField) -> np.ndarray:
    """``(n_nodes, N + 1)``: coordinates of every node (boundary included) and the value."""
    pts = field.grid.node_coordinates(interior=False)
    return np.column_stack([pts.reshape(-1, field.grid.ndim), field.full().reshape(-1)])


def write_nodal(path, field: NodalField, comments: Sequence[str] = ()) -> Path:
    header = [f"x{i + 1}" for i in range(field.grid.ndim)] + ["value"]
    return write_csv(path, header, nodal_rows(field), comments)
