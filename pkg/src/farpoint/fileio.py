"""Point-set files, trace exports and float formatting for reports."""
from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .geometry import FLOAT, RATIONAL, PointSet


def fmt_float(x: float) -> str:
    """17 significant digits, locale independent."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(x)
    return format(x, ".17g")


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with floats written at 17 significant digits; Fractions as "p/q"."""
    return _encode(obj)


def scalar_to_json(x):
    return str(x) if isinstance(x, Fraction) else float(x)


def point_set_to_dict(ps: PointSet) -> dict:
    out = {
        "d": ps.d,
        "mode": ps.mode,
        "points": [[scalar_to_json(x) for x in row] for row in ps.points],
    }
    if ps.gram is not None:
        out["gram"] = [[str(x) for x in row] for row in ps.gram]
    if ps.labels is not None:
        out["labels"] = list(ps.labels)
    return out


def point_set_from_dict(data: dict) -> PointSet:
    mode = data.get("mode", FLOAT)
    points = data["points"]
    if mode == RATIONAL and "gram" not in data:
        points = [[Fraction(str(x)) for x in row] for row in points]
    else:
        points = [[float(Fraction(x)) if isinstance(x, str) else float(x) for x in row] for row in points]
    ps = PointSet(points, mode, gram=data.get("gram"), labels=data.get("labels"))
    if "d" in data and int(data["d"]) != ps.d:
        raise ValueError(f"declared d={data['d']} but points have dimension {ps.d}")
    return ps


def load_point_set(path, mode: str | None = None) -> PointSet:
    """Read a point set from JSON, or CSV with one point per row."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        rows = [r for r in csv.reader(text.splitlines()) if r and not r[0].startswith("#")]
        mode = mode or FLOAT
        if mode == RATIONAL:
            pts = [[Fraction(c.strip()) for c in r] for r in rows]
        else:
            pts = [[float(Fraction(c.strip())) for c in r] for r in rows]
        return PointSet(pts, mode)
    data = json.loads(text)
    if mode is not None:
        data = dict(data, mode=mode)
    return point_set_from_dict(data)


def save_point_set(ps: PointSet, path) -> None:
    Path(path).write_text(dumps(point_set_to_dict(ps)) + "\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
