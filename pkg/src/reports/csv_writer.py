"""
src/reports/csv_writer.py
=========================
Tabular study results and their CSV form. Floats are written with a fixed
format so repeated runs produce identical files.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

from config.settings import OUTPUT_DIR

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.12e}"

# ── Headers ───────────────────────────────────────────────────────────────────
ENERGY_HEADER = ["step", "time", "internal_energy", "penalty_energy"]
CONVERGENCE_HEADER = ["n_e", "parity", "e_rel"]
SWEEP_HEADER = ["lambda", "rx", "ry", "rz", "err"]
CYLINDER_HEADER = ["u_hat", "F_R"]
POSITION_HEADER = ["node", "rx", "ry", "rz"]


@dataclass
class StudyResult:
    name: str
    header: List[str]
    rows: List[list] = field(default_factory=list)
    summary: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)  # one line per failed run; rows hold NaN

    def add_row(self, *values):
        if len(values) != len(self.header):
            raise ValueError(f"{self.name}: row has {len(values)} values, header has {len(self.header)}")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def add_failure(self, label: str, error: Exception, *leading):
        """Row of NaN after the leading key columns, plus a failure line."""
        self.failures.append(f"{label}: {error}")
        self.add_row(*leading, *[float("nan")] * (len(self.header) - len(leading)))


def format_value(value) -> str:
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value)
    try:
        return FLOAT_FORMAT.format(float(value))
    except (TypeError, ValueError):
        return str(value)


def format_rows(result: StudyResult) -> List[List[str]]:
    return [[format_value(v) for v in row] for row in result.rows]


def write_csv(result: StudyResult, out_dir=None, filename: str = None) -> Path:
    out = Path(out_dir or OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (filename or f"{result.name}.csv")
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(result.header)
        writer.writerows(format_rows(result))
    logger.info(f"Wrote {len(result.rows)} rows to {path}")
    return path


def summary_lines(result: StudyResult) -> Sequence[str]:
    return [f"{key} = {format_value(value)}" for key, value in sorted(result.summary.items())]
