"""Benchmark CSV ingestion and schema validation."""

import csv

COLUMNS = ["method", "tier", "tier_value", "task", "metric", "value",
           "wall_seconds", "rep", "seed", "threads"]


class SchemaError(ValueError):
    """The CSV header does not match the benchmark output contract."""


def read_records(csv_path):
    """Read a benchmark CSV into a list of typed row dicts.

    Raises :class:`SchemaError` naming the first missing column if the
    header does not contain every contract column.  Rows whose ``metric``
    is ``skipped`` or ``failed`` carry no measurement and are dropped.
    """
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in COLUMNS:
            if col not in header:
                raise SchemaError(f"missing required column: {col!r}")
        rows = []
        for raw in reader:
            if raw["metric"] in ("skipped", "failed"):
                continue
            rows.append({
                "method": raw["method"],
                "tier": int(raw["tier"]),
                "tier_value": raw["tier_value"],
                "task": raw["task"],
                "metric": raw["metric"],
                "value": float(raw["value"]),
                "wall_seconds": float(raw["wall_seconds"]),
                "rep": int(raw["rep"]),
                "seed": int(raw["seed"]),
                "threads": int(raw["threads"]),
            })
    return rows
