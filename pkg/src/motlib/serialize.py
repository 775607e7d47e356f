"""Deterministic file input/output for every serializable type.

Loaders accept CSV (one point per row, ``#`` comment lines allowed) and the
JSON alternatives documented per type.  Writers are canonical: keys sorted,
floats rendered with 17 significant digits, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .errors import InputFormatError
from .geometry import as_cloud
from .monotone import MaxAffinePotential, PairSet
from .transport import Coupling, make_discrete_measure, uniform_measure


def format_float(x):
    """17 significant digits: lossless round-trip for IEEE doubles."""
    if isinstance(x, float):
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        if math.isnan(x):
            return "NaN"
    return f"{x:.17g}"


def dumps_canonical(obj, indent=0):
    """Canonical JSON text: sorted keys, fixed float rendering."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True or obj is False or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (np.floating, float)):
        return format_float(float(obj))
    if isinstance(obj, (np.integer, int)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(pad + "  " + dumps_canonical(v, indent + 2)
                           for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(pad + "  " + json.dumps(str(key)) + ": "
                         + dumps_canonical(obj[key], indent + 2))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path):
    text = dumps_canonical(obj) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# CSV point files


def _read_rows(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            cells = [c for c in stripped.replace(",", " ").split() if c]
            try:
                rows.append(([float(c) for c in cells], lineno))
            except ValueError as exc:
                raise InputFormatError(
                    f"{path}:{lineno}: unparseable row {stripped!r}") from exc
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    width = len(rows[0][0])
    for cells, lineno in rows:
        if len(cells) != width:
            raise InputFormatError(
                f"{path}:{lineno}: expected {width} columns, got {len(cells)}")
    return np.array([cells for cells, _ in rows], dtype=float), width


def load_point_cloud(path, dim):
    if path.endswith(".json"):
        data = load_json(path)
        return as_cloud(data["points"], dim)
    arr, width = _read_rows(path)
    if width != dim:
        raise InputFormatError(
            f"{path}: expected {dim} columns for a point cloud, got {width}")
    return arr


def load_pair_set(path, dim):
    arr, width = _read_rows(path)
    if width != 2 * dim:
        raise InputFormatError(
            f"{path}: expected {2 * dim} columns for pairs, got {width}")
    return PairSet(arr[:, :dim], arr[:, dim:])


def load_measure(path, dim, weights_col=None):
    """CSV points with an optional weights column, or JSON
    {"points": [[...]], "weights": [...]}; uniform weights by default."""
    if path.endswith(".json"):
        data = load_json(path)
        pts = as_cloud(data["points"], dim)
        if data.get("weights") is not None:
            return make_discrete_measure(pts, data["weights"])
        return uniform_measure(pts)
    arr, width = _read_rows(path)
    if weights_col is not None:
        if width != dim + 1:
            raise InputFormatError(
                f"{path}: expected {dim + 1} columns with a weights column")
        cols = [c for c in range(width) if c != weights_col]
        return make_discrete_measure(arr[:, cols], arr[:, weights_col])
    if width == dim:
        return uniform_measure(arr)
    if width == dim + 1:
        return make_discrete_measure(arr[:, :dim], arr[:, dim])
    raise InputFormatError(
        f"{path}: expected {dim} or {dim + 1} columns, got {width}")


def load_points(path, dim_hint):
    """Generic loader: column count selects the type.

    d columns -> point cloud; 2d -> pair set; d+1 -> weighted measure.
    Ambiguous counts (for instance 2 columns when d = 1 could be pairs or a
    weighted measure) resolve in that order of preference; use the typed
    loaders when the kind is known.
    """
    arr, width = _read_rows(path)
    d = dim_hint
    if width == d:
        return arr
    if width == 2 * d:
        return PairSet(arr[:, :d], arr[:, d:])
    if width == d + 1:
        return make_discrete_measure(arr[:, :d], arr[:, d])
    raise InputFormatError(
        f"{path}: {width} columns match none of d={d}, 2d, d+1")


def write_point_cloud(points, path):
    pts = as_cloud(points)
    with open(path, "w") as fh:
        for row in pts:
            fh.write(",".join(format_float(float(x)) for x in row) + "\n")


# ---------------------------------------------------------------------------
# typed JSON forms


def potential_to_json(potential):
    return {
        "slopes": potential.slopes.tolist(),
        "intercepts": potential.intercepts.tolist(),
        "base_index": int(potential.base_index),
        "dim": int(potential.dim),
    }


def potential_from_json(obj):
    if "slopes" not in obj and "body" in obj:
        obj = obj["body"]  # accept a full CLI report envelope
    psi = MaxAffinePotential(obj["slopes"], obj["intercepts"],
                             obj.get("base_index", 0))
    if psi.dim != obj.get("dim", psi.dim):
        raise InputFormatError("potential dim field disagrees with slopes")
    return psi


def measure_to_json(measure):
    return {"points": measure.points.tolist(),
            "weights": measure.weights.tolist()}


def coupling_to_json(coupling):
    return {
        "source": measure_to_json(coupling.source),
        "target": measure_to_json(coupling.target),
        "plan": [{"i": int(i), "j": int(j), "mass": float(m)}
                 for i, j, m in zip(coupling.rows, coupling.cols,
                                    coupling.mass)],
        "cost": coupling.transport_cost(),
    }


def coupling_from_json(obj):
    src = make_discrete_measure(obj["source"]["points"],
                                obj["source"]["weights"])
    tgt = make_discrete_measure(obj["target"]["points"],
                                obj["target"]["weights"])
    plan = obj["plan"]
    return Coupling(src, tgt,
                    [e["i"] for e in plan],
                    [e["j"] for e in plan],
                    [e["mass"] for e in plan])


def report_rows_to_csv(report_json, path):
    """Flatten a converge report: one row per (n, rep, metric)."""
    metrics = ("sup_error_k", "hausdorff_k", "hausdorff_k_delta",
               "global_sup_e", "range_contained", "fell_miss", "fell_hit",
               "monotone_certified")
    with open(path, "w") as fh:
        fh.write("n,rep,metric,value\n")
        for row in report_json["rows"]:
            for metric in metrics:
                val = row.get(metric)
                if val is None:
                    continue
                if isinstance(val, bool):
                    text = "true" if val else "false"
                else:
                    text = format_float(float(val))
                fh.write(f"{row['n']},{row['rep']},{metric},{text}\n")


def ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
