"""Tabular output of measured constants with reproducibility metadata.

Files carry the toolkit version, the fully resolved run configuration, the
seed and all tolerances. Nothing time- or host-dependent is written, so a
repeated run with the same configuration produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from . import __version__

CSV_COLUMNS = (
    "study",
    "k",
    "d",
    "N",
    "theta",
    "constant_name",
    "value",
    "kernel_dim",
    "n_vel_dofs",
    "n_pr_dofs",
    "seed",
)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class ConstantReport:
    config: dict
    tolerances: dict
    rows: list = field(default_factory=list)

    def add(self, **row):
        missing = set(CSV_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"row is missing columns {sorted(missing)}")
        self.rows.append({c: row[c] for c in CSV_COLUMNS})

    @property
    def metadata(self):
        return {
            "version": __version__,
            "config": self.config,
            "seed": self.config.get("seed"),
            "tolerances": self.tolerances,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "rows": self.rows}, indent=1, sort_keys=True) + "\n"

    def render(self, fmt="csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, path, fmt="csv"):
        with open(path, "w", newline="") as fh:
            fh.write(self.render(fmt))


def read_csv(text: str):
    """Parse a report written by :meth:`ConstantReport.to_csv` into (metadata, rows)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows
