"""Deterministic report writers.

Reports must be byte-identical across runs with the same config and seed:
JSON is written with sorted keys, floats go through ``repr`` (shortest
round-trip form), and no timestamps or machine identifiers are embedded.
"""
from __future__ import annotations

import csv
import hashlib
import json


def config_digest(config: dict) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON encoding."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json_report(path, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(payload))


def write_csv_table(path, header: list[str], rows, comments: list[str] | None = None) -> None:
    """CSV with optional '#' comment lines; floats rendered via repr."""
    with open(path, "w", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (int, float)) else str(v)
                             for v in row])
