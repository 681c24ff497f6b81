"""Run records and their CSV / NDJSON serializations.

Schemas are versioned through the `schema` column; tests pin the exact
header lists, so any accidental schema drift fails loudly. Floats are
written with repr (shortest round-trip), which makes seeded runs
byte-reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

RUN_SCHEMA = "run-v1"
AGG_SCHEMA = "agg-v1"

AGG_CSV_HEADER = [
    "schema",
    "step",
    "rmse_median",
    "rmse_std",
    "rmse_lo",
    "rmse_hi",
    "mi_median",
    "mi_std",
    "mi_lo",
    "mi_hi",
]


@dataclass(frozen=True, eq=False)
class RunRow:
    """One interaction: the trial answered at `step` and the updated belief.

    theta_pre is the estimate before this interaction's update (the
    trajectory of estimates before each response); rmse columns compare
    both estimates to the known simulated truth.
    """

    step: int
    x_ref: np.ndarray
    x_alt: np.ndarray
    response: int
    mi_bits: float
    mu: np.ndarray
    sigma_trace: float
    theta_pre: np.ndarray
    theta_post: np.ndarray
    rmse_pre: float
    rmse_post: float


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Full per-step log of one simulated session."""

    dims: int
    rows: tuple
    status: str
    theta_true: np.ndarray
    final_rsu: float


def run_csv_header(dims: int) -> list:
    head = ["schema", "step"]
    head += [f"x_ref_{d}" for d in range(dims)]
    head += [f"x_alt_{d}" for d in range(dims)]
    head += ["response", "mi_bits"]
    head += [f"mu_{i}" for i in range(2 * dims)]
    head += ["sigma_trace"]
    head += [f"theta_pre_{d}" for d in range(dims)]
    head += [f"theta_post_{d}" for d in range(dims)]
    head += ["rmse_pre", "rmse_post"]
    return head


def _fmt(x) -> str:
    return repr(float(x))


def _row_cells(row: RunRow) -> list:
    cells = [RUN_SCHEMA, str(row.step)]
    cells += [_fmt(v) for v in row.x_ref]
    cells += [_fmt(v) for v in row.x_alt]
    cells += [str(row.response), _fmt(row.mi_bits)]
    cells += [_fmt(v) for v in row.mu]
    cells += [_fmt(row.sigma_trace)]
    cells += [_fmt(v) for v in row.theta_pre]
    cells += [_fmt(v) for v in row.theta_post]
    cells += [_fmt(row.rmse_pre), _fmt(row.rmse_post)]
    return cells


def write_run_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(run_csv_header(record.dims))
        for row in record.rows:
            writer.writerow(_row_cells(row))


def row_to_dict(row: RunRow) -> dict:
    return {
        "schema": RUN_SCHEMA,
        "step": row.step,
        "x_ref": [float(v) for v in row.x_ref],
        "x_alt": [float(v) for v in row.x_alt],
        "response": row.response,
        "mi_bits": float(row.mi_bits),
        "mu": [float(v) for v in row.mu],
        "sigma_trace": float(row.sigma_trace),
        "theta_pre": [float(v) for v in row.theta_pre],
        "theta_post": [float(v) for v in row.theta_post],
        "rmse_pre": float(row.rmse_pre),
        "rmse_post": float(row.rmse_post),
    }


def write_run_ndjson(record: RunRecord, path) -> None:
    with open(path, "w") as fh:
        for row in record.rows:
            fh.write(json.dumps(row_to_dict(row), sort_keys=True))
            fh.write("\n")


def write_aggregate_csv(rows, path) -> None:
    """Write the benchmark aggregate table (list of dicts keyed by step)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_CSV_HEADER)
        for row in rows:
            writer.writerow(
                [AGG_SCHEMA, str(row["step"])]
                + [_fmt(row[k]) for k in AGG_CSV_HEADER[2:]]
            )
