"""Deterministic artifact writers.

Reruns of the same scenario must produce byte-identical files, so nothing
here consults the clock, the environment, or dict iteration accidents:
floats are rendered with 17 significant digits (enough to round-trip a
double exactly), dictionaries keep their construction order, and line
endings are fixed to newline regardless of platform.  The JSON emitter is
deliberately hand-rolled; the stdlib encoder renders floats with repr and
offers no hook to change that.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    """17-significant-digit rendering; exact round-trip for finite doubles."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.17g}"


def _emit(value, indent: int, pieces: list[str]):
    pad = "  " * indent
    if value is None:
        pieces.append("null")
    elif isinstance(value, bool) or isinstance(value, np.bool_):
        pieces.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        pieces.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        v = float(value)
        pieces.append(fmt_float(v) if math.isfinite(v) else "null")
    elif isinstance(value, str):
        pieces.append(json.dumps(value))
    elif isinstance(value, dict):
        if not value:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (k, v) in enumerate(value.items()):
            pieces.append(f"{pad}  {json.dumps(str(k))}: ")
            _emit(v, indent + 1, pieces)
            pieces.append(",\n" if i < len(value) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, v in enumerate(seq):
            pieces.append(pad + "  ")
            _emit(v, indent + 1, pieces)
            pieces.append(",\n" if i < len(seq) - 1 else "\n")
        pieces.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__} deterministically")


def json_dumps(value) -> str:
    pieces: list[str] = []
    _emit(value, 0, pieces)
    pieces.append("\n")
    return "".join(pieces)


def write_json(path: Path, value) -> None:
    Path(path).write_text(json_dumps(value))


def write_timeseries(path: Path, traj, functional_names: list[str]) -> None:
    """Record table: t, masses, sup norms, cumulative clamp, then one column
    per tracked functional (missing values render empty)."""
    header = ["t", "mass_S", "mass_I", "linf_S", "linf_I", "clamp_mass"]
    header += list(functional_names)
    lines = [",".join(header)]
    for r in traj.records:
        row = [fmt_float(r.t), fmt_float(r.mass_S), fmt_float(r.mass_I),
               fmt_float(r.linf_S), fmt_float(r.linf_I), fmt_float(r.clamp_total)]
        for name in functional_names:
            v = r.functionals.get(name)
            row.append("" if v is None else fmt_float(v))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshot(path: Path, grid, S: np.ndarray, I: np.ndarray) -> None:
    """Cell table in row-major order: coordinates, then S and I."""
    coords = grid.coordinate_fields()
    if grid.dim == 1:
        header = "x,S,I"
        cols = [coords["x"].reshape(-1)]
    else:
        header = "x,y,S,I"
        cols = [coords["x"].reshape(-1), coords["y"].reshape(-1)]
    cols += [S.reshape(-1), I.reshape(-1)]
    lines = [header]
    for row in zip(*cols):
        lines.append(",".join(fmt_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """Generic small-table writer with the same float policy."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return fmt_float(v)
        return str(v)

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
