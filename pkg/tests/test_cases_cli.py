"""Case registry, output formats, manifest reproducibility, CLI surface."""

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nitscheflow.cases import (
    Kovasznay,
    compare_runs,
    jet_axis_profile,
    resolve_config,
    run_case,
)
from nitscheflow.forms import ConfigurationError
from nitscheflow.mesh import generate_rectangle, generate_T_jet
from nitscheflow.output import emit_csv, emit_vtk, read_manifest, write_manifest


def test_vtk_single_cell(tmp_path):
    mesh = generate_rectangle(0, 1, 0, 1, 1, 1)
    u = np.arange(3.0 * mesh.n_nodes)
    path = tmp_path / "one.vtk"
    emit_vtk(u, mesh, path)
    text = path.read_text().splitlines()
    assert "POINTS 4 double" in text
    assert "CELLS 1 5" in text
    idx = text.index("CELL_TYPES 1")
    assert text[idx + 1] == "9"
    assert "VECTORS velocity double" in text
    assert "SCALARS pressure double" in text
    assert sum(1 for line in text if line.startswith("4 ")) == 1


def test_csv_schema(tmp_path):
    rows = [[1, 0.5, 2e-3], [2, 0.25, 1e-3]]
    path = tmp_path / "t.csv"
    emit_csv(rows, path, header=["a", "b", "c"])
    with open(path) as f:
        data = list(csv.reader(f))
    assert data[0] == ["a", "b", "c"]
    assert all(len(r) == 3 for r in data)
    assert float(data[1][2]) == 2e-3


def test_manifest_roundtrip(tmp_path):
    cfg = resolve_config("jet", overrides={"numerics": {"dt": "0.02"}})
    p = tmp_path / "m.cfg"
    write_manifest(cfg, p)
    back = read_manifest(p)
    cfg2 = resolve_config("jet", file_cfg=back)
    assert cfg2["numerics"]["dt"] == 0.02
    assert cfg2 == cfg


def test_unknown_case_and_keys():
    with pytest.raises(ConfigurationError):
        resolve_config("nonexistent")
    with pytest.raises(ConfigurationError):
        resolve_config("jet", overrides={"numerics": {"bogus_key": "1"}})
    with pytest.raises(ConfigurationError):
        resolve_config("jet", overrides={"bogus_section": {"x": "1"}})


def test_registry_covers_all_experiments():
    from nitscheflow.cases import DEFAULTS
    assert set(DEFAULTS) == {"kovasznay", "standing_vortex", "bfs", "cylinder",
                             "fraenkel", "jet"}


def test_jet_run_and_manifest_reproducibility(tmp_path):
    overrides = {"numerics": {"t_end": "0.05", "dt": "0.01"},
                 "geometry": {"level": "0"}, "output": {"vtk": "0"}}
    cfg = resolve_config("jet", overrides=overrides)
    run_case(cfg, tmp_path / "a")
    # re-run from the manifest: identical CSV bytes
    cfg2 = resolve_config("jet", file_cfg=read_manifest(tmp_path / "a" / "manifest.cfg"))
    run_case(cfg2, tmp_path / "b")
    assert (tmp_path / "a" / "run.csv").read_bytes() == (tmp_path / "b" / "run.csv").read_bytes()
    assert (tmp_path / "a" / "axis.csv").read_bytes() == (tmp_path / "b" / "axis.csv").read_bytes()
    dev = compare_runs(tmp_path / "a", tmp_path / "b", 1.0)
    assert dev == 0.0


def test_jet_axis_profile():
    mesh = generate_T_jet(scale=2.0, level=0)
    u = np.zeros(3 * mesh.n_nodes)
    u.reshape(-1, 3)[:, 2] = mesh.nodes[:, 0]
    xs, ps = jet_axis_profile(u, mesh, 2.0)
    assert len(xs) == 17  # 16-cell side at level 0
    np.testing.assert_allclose(ps, xs)
    assert np.all(np.diff(xs) > 0)


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "nitscheflow.cli", *args],
                          capture_output=True, text=True)


def test_cli_mesh_and_exit_codes(tmp_path):
    r = _cli("mesh", "--case", "jet", "--level", "0", "--out", str(tmp_path / "m.txt"))
    assert r.returncode == 0
    assert (tmp_path / "m.txt").exists()
    r = _cli("run", "--case", "not_a_case", "--out", str(tmp_path / "x"))
    assert r.returncode == 2
    r = _cli("run", "--case", "jet", "--set", "numerics.bogus=1",
             "--out", str(tmp_path / "x"))
    assert r.returncode == 2
    r = _cli("compare", "--a", str(tmp_path / "nope"), "--b", str(tmp_path / "nope"),
             "--scale", "10")
    assert r.returncode == 2


def test_cli_run_and_compare(tmp_path):
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    base = ["run", "--case", "jet", "--set", "numerics.t_end=0.03",
            "--set", "numerics.dt=0.01", "--set", "geometry.level=0",
            "--set", "output.vtk=0"]
    r = _cli(*base, "--set", "geometry.scale=1.0", "--out", a)
    assert r.returncode == 0, r.stderr
    r = _cli(*base, "--set", "geometry.scale=10.0", "--out", b)
    assert r.returncode == 0, r.stderr
    r = _cli("compare", "--a", a, "--b", b, "--scale", "10")
    assert r.returncode == 0
    dev = float(r.stdout.strip().rsplit(" ", 1)[1])
    assert dev < 1e-9


def test_kovasznay_case_errors_csv(tmp_path):
    cfg = resolve_config("kovasznay", overrides={"geometry": {"levels": "2"},
                                                 "output": {"vtk": "0"}})
    res = run_case(cfg, tmp_path)
    with open(tmp_path / "errors.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0][0] == "N"
    assert [r[0] for r in rows[1:]] == ["48", "192"]
    assert res["N"] == [48, 192]
