"""CSV/JSON serialization of trajectories, eigen-traces and reports.

All writers emit UTF-8 with LF line endings and 17 significant digits so
that identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import is_dataclass, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import EigenTrace
from .sim import Trajectory


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_header(dim: int, controlled: bool) -> list[str]:
    cols = ["t"] + [f"x{i + 1}" for i in range(dim)] + ["norm2", "u"]
    if controlled:
        cols += ["k1", "k2", "k3", "k4"]
    return cols + ["latched"]


def write_trajectory_csv(path, tr: Trajectory) -> None:
    controlled = tr.gains is not None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(tr.dim, controlled))
        for i, t in enumerate(tr.times):
            row = [fmt(t)] + [fmt(v) for v in tr.states[i]] + [fmt(tr.norms[i])]
            row.append(fmt(tr.inputs[i]) if tr.inputs is not None else "")
            if controlled:
                row += [fmt(v) for v in tr.gains[i]]
            row.append("1" if tr.latched is not None and tr.latched[i] else "0")
            w.writerow(row)


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Columns of a trajectory CSV as float arrays (empty cells become NaN)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        cols[name] = np.array([float(r[j]) if r[j] != "" else math.nan for r in body])
    return cols


def write_eigtrace_csv(path, trace: EigenTrace) -> None:
    n = trace.spectra.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [c for i in range(n) for c in (f"re{i + 1}", f"im{i + 1}")])
        for t, row in zip(trace.times, trace.spectra):
            w.writerow([fmt(t)] + [s for z in row for s in (fmt(z.real), fmt(z.imag))])


def read_eigtrace_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    spectra = body[:, 1::2] + 1j * body[:, 2::2]
    return body[:, 0], spectra


def jsonable(obj):
    """Convert numpy/dataclass values to plain JSON types; non-finite floats become strings."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def ensure_dir(path: Optional[str]) -> Path:
    p = Path(path or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p
