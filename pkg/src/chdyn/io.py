"""Delimited output and snapshot files.

CSV values are printed with 17 significant digits so that re-reading a
file reproduces the in-memory doubles exactly. Snapshots use the legacy
ASCII VTK unstructured-grid format (triangles plus point scalars).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mesh import Mesh

__all__ = [
    "CONVERGENCE_HEADER",
    "SERIES_HEADER",
    "write_convergence_csv",
    "read_convergence_csv",
    "write_series_csv",
    "read_series_csv",
    "write_vtk",
]

CONVERGENCE_HEADER = [
    "level", "h", "tau", "dof",
    "err_u_l2", "err_u_h1", "err_w_l2", "err_w_h1",
    "eoc_u_l2", "eoc_u_h1", "eoc_w_l2", "eoc_w_h1",
]
SERIES_HEADER = ["step", "t", "mass", "energy"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_convergence_csv(records, path) -> None:
    """One row per run; EOC cells are empty where undefined."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CONVERGENCE_HEADER)
        for r in records:
            writer.writerow([
                _fmt(r.level), _fmt(r.h), _fmt(r.tau), _fmt(r.dof),
                _fmt(r.err_u_l2), _fmt(r.err_u_h1), _fmt(r.err_w_l2), _fmt(r.err_w_h1),
                _fmt(r.eoc_u_l2), _fmt(r.eoc_u_h1), _fmt(r.eoc_w_l2), _fmt(r.eoc_w_h1),
            ])


def read_convergence_csv(path) -> list[dict]:
    """Rows as dicts with floats/ints; absent EOC becomes None."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CONVERGENCE_HEADER:
            raise ValueError(
                f"unexpected convergence CSV header {reader.fieldnames}"
            )
        for raw in reader:
            row = {"level": int(raw["level"]), "dof": int(raw["dof"])}
            for key in CONVERGENCE_HEADER:
                if key in ("level", "dof"):
                    continue
                row[key] = float(raw[key]) if raw[key] != "" else None
            rows.append(row)
    return rows


def write_series_csv(rows, path) -> None:
    """Rows are (step, t, mass, energy) tuples."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SERIES_HEADER)
        for step, t, mass, energy in rows:
            writer.writerow([_fmt(step), _fmt(t), _fmt(mass), _fmt(energy)])


def read_series_csv(path) -> list[tuple]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != SERIES_HEADER:
            raise ValueError(f"unexpected series CSV header {reader.fieldnames}")
        for raw in reader:
            rows.append((int(raw["step"]), float(raw["t"]),
                         float(raw["mass"]), float(raw["energy"])))
    return rows


def write_vtk(path, mesh: Mesh, point_data: dict[str, np.ndarray],
              title: str = "snapshot") -> None:
    """Legacy ASCII VTK unstructured grid with point scalar arrays."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title}\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g} 0\n")
        f.write(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {mesh.n_triangles}\n")
        f.write("5\n" * mesh.n_triangles)
        f.write(f"POINT_DATA {mesh.n_vertices}\n")
        for name, values in point_data.items():
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for val in values:
                f.write(f"{val:.17g}\n")
