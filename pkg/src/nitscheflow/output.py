"""Run artifacts: legacy-ASCII VTK fields, CSV tables, config manifests."""

from __future__ import annotations

import configparser
import csv
from pathlib import Path

import numpy as np

from .forms import split_field
from .mesh import Mesh

__all__ = ["emit_vtk", "emit_csv", "write_manifest", "read_manifest"]


def emit_vtk(u, mesh: Mesh, path):
    """Legacy ASCII UNSTRUCTURED_GRID with QUAD cells, velocity + pressure."""
    v, p = split_field(u, mesh)
    lines = [
        "# vtk DataFile Version 3.0",
        "nitsche-flow fields",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g} 0")
    lines.append(f"CELLS {mesh.n_cells} {5 * mesh.n_cells}")
    for c in mesh.cells:
        lines.append(f"4 {c[0]} {c[1]} {c[2]} {c[3]}")
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["9"] * mesh.n_cells)
    lines.append(f"POINT_DATA {mesh.n_nodes}")
    lines.append("VECTORS velocity double")
    for vx, vy in v:
        lines.append(f"{vx:.17g} {vy:.17g} 0")
    lines.append("SCALARS pressure double")
    lines.append("LOOKUP_TABLE default")
    for pi in p:
        lines.append(f"{pi:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def emit_csv(rows, path, header=None):
    """CSV with a header row, decimal dot, 17-significant-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        if header:
            w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v
                        for v in row])


def write_manifest(cfg: dict, path):
    """Resolved run configuration as [section] key = value text."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for section, values in cfg.items():
        cp[section] = {k: repr(v) if isinstance(v, float) else str(v)
                       for k, v in values.items()}
    with open(path, "w") as f:
        cp.write(f)


def read_manifest(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    with open(path) as f:
        cp.read_file(f)
    return {s: dict(cp[s]) for s in cp.sections()}
