"""Plain-text persistence: CSV arrays, linear maps with a JSON sidecar, results tables."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..recovery import LinearMap

__all__ = [
    "RESULT_FIELDS",
    "format_float",
    "write_array",
    "read_array",
    "write_map",
    "read_map",
    "sidecar_path",
    "write_results",
    "read_results",
    "write_json",
]

RESULT_FIELDS = ("trial", "delta", "error", "bound", "success", "iters", "wall_ms")


def format_float(x):
    """Shortest round-tripping decimal; ``nan`` and ``inf`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_array(path, a):
    """Write a vector (one value per line) or a matrix (one row per line), no header."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidInputError("only vectors and matrices can be written")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in a:
            writer.writerow(format_float(v) for v in row)


def read_array(path):
    """Inverse of ``write_array``; single-column files come back as vectors."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise InvalidInputError(f"{path} is empty")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{path} has ragged rows")
    a = np.array(rows)
    return a[:, 0] if a.shape[1] == 1 else a


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_map(path, M):
    write_array(path, M.rep)
    write_json(sidecar_path(path), {"q": M.q, "m": M.m, "n": M.n})


def read_map(path):
    with open(sidecar_path(path)) as fh:
        shape = json.load(fh)
    rep = read_array(path)
    if rep.ndim == 1:
        rep = rep[:, None] if shape["m"] * shape["n"] == 1 else rep[None, :]
    if rep.shape != (shape["q"], shape["m"] * shape["n"]):
        raise InvalidInputError(f"{path} does not match its sidecar shape {shape}")
    return LinearMap(rep, shape["m"], shape["n"])


def write_results(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for rec in records:
            writer.writerow([
                rec.trial,
                format_float(rec.delta),
                format_float(rec.error),
                format_float(rec.bound),
                int(rec.success),
                rec.iters,
                format_float(rec.wall_ms),
            ])


def read_results(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
            raise InvalidInputError(f"{path} has an unexpected header")
        return list(reader)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
