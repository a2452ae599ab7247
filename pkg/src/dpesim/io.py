"""CSV and manifest writers with locale-independent, reproducible output.

CSV files are RFC-4180-style with a mandatory header row and '.' decimal
separator; optional leading '#' comment lines echo the resolved
configuration so any artifact can be regenerated from itself.
"""

import csv
from pathlib import Path

import numpy as np


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path, columns, rows, echo=None) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in echo or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV written by write_csv; '#' lines are skipped."""
    path = Path(path)
    rows = []
    header: list[str] | None = None
    with path.open(newline="") as fh:
        for record in csv.reader(fh):
            if not record or record[0].startswith("#"):
                continue
            if header is None:
                header = record
                continue
            rows.append([float(v) for v in record])
    if header is None:
        raise ValueError(f"{path}: no header row")
    return header, np.asarray(rows, dtype=float)


def write_manifest(path, subcommand: str, items) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"subcommand = {subcommand}\n")
        for key, value in items:
            fh.write(f"{key} = {value}\n")
