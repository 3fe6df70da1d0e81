"""CSV / JSON serialisation of head fields and perturbation traces.

Floats are written with ``repr`` (shortest round-trip form), so identical
fields always give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .scheme import AquiferParams, Grid, HeadField

__all__ = ["field_to_csv", "field_from_csv", "field_to_json", "field_from_json", "trace_to_csv"]


def _fmt(x) -> str:
    return repr(float(x))


def field_to_csv(h: HeadField) -> str:
    """``r,t,h`` rows, one per (j, k), time-major."""
    buf = io.StringIO()
    buf.write("r,t,h\n")
    r, t = h.grid.r, h.grid.t
    for k in range(t.size):
        tk = _fmt(t[k])
        for j in range(r.size):
            buf.write(f"{_fmt(r[j])},{tk},{_fmt(h.values[j, k])}\n")
    return buf.getvalue()


def field_from_csv(text: str):
    """Return ``(r, t, values)`` with ``values[j, k]`` from CSV text."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if [c.strip() for c in header] != ["r", "t", "h"]:
        raise ValueError(f"unexpected CSV header {header}")
    rows = np.array([[float(c) for c in row] for row in reader if row])
    r = np.unique(rows[:, 0])
    t = np.unique(rows[:, 1])
    values = rows[:, 2].reshape(t.size, r.size).T
    return r, t, values


def field_to_json(h: HeadField, params: AquiferParams | None = None, alpha: float | None = None) -> str:
    g: Grid = h.grid
    doc = {
        "grid": {
            "r_min": g.r_min,
            "r_max": g.r_max,
            "n_cells": g.n_cells,
            "t_max": g.t_max,
            "n_steps": g.n_steps,
            "r": g.r.tolist(),
            "t": g.t.tolist(),
        },
        "params": {},
        "field": h.values.tolist(),
    }
    if params is not None:
        doc["params"].update(transmissivity=params.transmissivity, storativity=params.storativity)
    if alpha is not None:
        doc["params"]["alpha"] = alpha
    return json.dumps(doc, indent=1) + "\n"


def field_from_json(text: str) -> HeadField:
    doc = json.loads(text)
    g = doc["grid"]
    grid = Grid(g["r_max"], g["n_cells"], g["t_max"], g["n_steps"], r_min=g["r_min"])
    values = np.array(doc["field"], dtype=float)
    return HeadField(grid, values, values[:, 0].copy())


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    buf.write("k,t_k,norm,growth_ratio\n")
    for k, t, n, g in trace.rows():
        buf.write(f"{k},{_fmt(t)},{_fmt(n)},{_fmt(g)}\n")
    return buf.getvalue()
