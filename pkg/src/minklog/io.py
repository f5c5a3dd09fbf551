"""Measure, body and report files.

All files are JSON objects. Floats go through ``repr`` (shortest round-trip
decimal), so a value written and read back is bit-identical. Key order is
fixed by the writer, which keeps repeated runs byte-identical.

Measure file::

    {"n": 2, "directions": [[1.0, 0.0], ...], "weights": [1.0, ...], "name": "..."}

Body file (any object with ``directions`` and ``h_star``, so solve reports
double as body files)::

    {"n": 2, "directions": [...], "h_star": [...]}
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from .errors import GeometryError, MinklogError
from .geometry import UNIT_TOL, DirectionSet, DiscreteMeasure, SupportVector

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
NORM_WARN = 1e-6


class InputFileError(MinklogError, ValueError):
    """A measure, body or report file is missing, malformed or inconsistent."""


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFileError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise InputFileError(f"{path}: expected a JSON object at top level")
    return data


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite float {v}")
        return v
    return value


def dumps(data: dict) -> str:
    return json.dumps(_plain(data), indent=1, allow_nan=False) + "\n"


def write_json(path, data: dict) -> None:
    Path(path).write_text(dumps(data))


def _field(data: dict, key: str, where: str):
    if key not in data:
        raise InputFileError(f"{where}: missing field {key!r}")
    return data[key]


def _float_array(value, key: str, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputFileError(f"{where}: field {key!r} is not numeric") from exc
    if arr.ndim != ndim:
        raise InputFileError(f"{where}: field {key!r} must be a {ndim}-D array")
    if not np.all(np.isfinite(arr)):
        raise InputFileError(f"{where}: field {key!r} contains non-finite values")
    return arr


def parse_directions(data: dict, where: str = "input") -> DirectionSet:
    u = _float_array(_field(data, "directions", where), "directions", where, 2)
    n = data.get("n", u.shape[1])
    if not isinstance(n, int) or n != u.shape[1]:
        raise InputFileError(f"{where}: n = {n!r} does not match {u.shape[1]}-component directions")
    norms = np.linalg.norm(u, axis=1)
    if np.any(norms == 0):
        raise InputFileError(f"{where}: zero direction vector")
    off = np.abs(norms - 1.0)
    if np.any(off > NORM_WARN):
        logger.warning("%s: %d direction(s) off unit length by up to %.3g; normalizing",
                       where, int(np.sum(off > NORM_WARN)), float(off.max()))
    # rows already unit to rounding are kept verbatim so files round-trip exactly
    fix = off > 0.1 * UNIT_TOL
    u[fix] = u[fix] / norms[fix, None]
    try:
        return DirectionSet(u)
    except GeometryError as exc:
        raise InputFileError(f"{where}: {exc}") from exc


def parse_measure(data: dict, where: str = "measure") -> DiscreteMeasure:
    dirs = parse_directions(data, where)
    c = _float_array(_field(data, "weights", where), "weights", where, 1)
    if c.shape != (len(dirs),):
        raise InputFileError(f"{where}: {c.size} weights for {len(dirs)} directions")
    if np.any(c <= 0):
        raise InputFileError(f"{where}: weights must be strictly positive")
    return DiscreteMeasure(dirs, c)


def parse_body(data: dict, where: str = "body") -> SupportVector:
    dirs = parse_directions(data, where)
    h = _float_array(_field(data, "h_star", where), "h_star", where, 1)
    if h.shape != (len(dirs),):
        raise InputFileError(f"{where}: {h.size} support numbers for {len(dirs)} directions")
    if np.any(h <= 0):
        raise InputFileError(f"{where}: support numbers must be strictly positive")
    return SupportVector(dirs, h)


def load_measure(path) -> DiscreteMeasure:
    return parse_measure(read_json(path), str(path))


def load_body(path) -> SupportVector:
    return parse_body(read_json(path), str(path))


def measure_record(mu: DiscreteMeasure, name: str | None = None) -> dict:
    out = {"n": mu.n, "directions": mu.dirs.vectors, "weights": mu.weights}
    if name is not None:
        out["name"] = name
    return out


def body_record(sv: SupportVector) -> dict:
    return {"n": sv.n, "directions": sv.dirs.vectors, "h_star": sv.h}
