# Copyright Fracsense Authors 2026
import numpy as np
import pytest

from fracsense import _serialization as io
from fracsense.exception import InvalidError, NotFoundError
from fracsense.forward import FarFieldDataset, ObservationGrid, StiffnessField, excitation_waves
from fracsense.glsm import TRIAL_NORMALS, IndicatorMap
from fracsense.mesh import FodVector, FractureMesh, interior_collocation
from fracsense.regularization import DiagonalFactors, regularize
from fracsense.stiffness_inversion import RecoveredStiffness


def test_mesh_file(tmp_path, patch):
    path = tmp_path / "mesh.txt"
    io.write_mesh(path, patch)
    lines = path.read_text().splitlines()
    assert lines[0] == "nds 25 els 16"
    assert len(lines) == 1 + 25 + 16
    mesh = io.read_mesh(path)
    assert np.array_equal(mesh.nodes, patch.nodes)
    assert np.array_equal(mesh.elements, patch.elements)
    assert mesh.info["kind"] == "file"


def test_mixed_mesh_file(tmp_path):
    mesh = FractureMesh.from_arrays(
        np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [2, 0.5, 0]]), [[0, 1, 2, 3], [1, 4, 2]]
    )
    path = tmp_path / "mesh.txt"
    io.write_mesh(path, mesh)
    assert path.read_text().splitlines()[-1] == "1 4 2"
    assert io.read_mesh(path).is_tri.tolist() == [False, True]


def test_truncated_mesh_file(tmp_path):
    path = tmp_path / "mesh.txt"
    path.write_text("nds 3 els 1\n0 0 0\n1 0 0\n")
    with pytest.raises(InvalidError):
        io.read_mesh(path)
    with pytest.raises(NotFoundError):
        io.read_mesh(tmp_path / "missing.txt")


def test_farfield_file(tmp_path):
    grid = ObservationGrid(3, 4)
    waves = excitation_waves(grid, 2.5)[:2]
    rng = np.random.default_rng(0)
    amplitudes = rng.normal(size=(2, grid.size, 3)) + 1j * rng.normal(size=(2, grid.size, 3))
    data = FarFieldDataset(grid=grid, omega=2.5, amplitudes=amplitudes, incident=tuple(waves))
    path = tmp_path / "farfield.txt"
    io.write_farfield(path, data)
    body = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    assert len(body) == 2 * grid.size
    assert len(body[0].split()) == 14
    back = io.read_farfield(path)
    assert back.omega == 2.5
    assert back.grid.size == grid.size
    assert np.allclose(back.amplitudes, amplitudes, rtol=1e-13, atol=1e-13)
    assert np.array_equal(back.incident[1].q_s, waves[1].q_s)


def test_stiffness_files(tmp_path, penny):
    colloc = interior_collocation(penny, 1)
    truth = StiffnessField.diagonal(colloc.points, 5 - 1j, 4 - 0.8j, 3 - 0.5j)
    io.write_stiffness_truth(tmp_path / "truth.txt", truth)
    back = io.read_stiffness_truth(tmp_path / "truth.txt")
    assert np.array_equal(back.matrices, truth.matrices)

    values = truth.components
    solution = regularize(DiagonalFactors(np.ones(values.size)), values.ravel(), 0.0)
    reliability = np.linspace(0, 1, colloc.n_points)
    rec = RecoveredStiffness("diagonal", colloc.points, values, reliability, np.ones((colloc.n_points, 3)), solution)
    io.write_stiffness(tmp_path / "stiffness.txt", rec)
    table = io.read_stiffness(tmp_path / "stiffness.txt")
    assert table["mode"] == "diagonal"
    assert np.array_equal(table["values"], values)
    assert np.array_equal(table["reliability"], reliability)
    assert table["component_reliability"].shape == (colloc.n_points, 3)


def test_indicator_map_file(tmp_path):
    points = np.array([[0.0, 0.1, 0.2], [0.3, 0.4, 0.5]])
    imap = IndicatorMap(points, np.array([1.5, 0.25]), np.array([2, 7]), TRIAL_NORMALS, 0.1)
    io.write_indicator_map(tmp_path / "map.txt", imap)
    back = io.read_indicator_map(tmp_path / "map.txt")
    assert np.array_equal(back.points, points)
    assert back.normal_index.tolist() == [2, 7]
    assert np.array_equal(back.normals, TRIAL_NORMALS)
    assert back.spacing == 0.1


def test_fod_file(tmp_path, penny):
    fod = FodVector.from_function(penny, lambda x: np.outer(0.25 - np.sum(x**2, axis=-1), [0.1j, 0.0, 1.0]))
    io.write_fod(tmp_path / "fod.txt", fod)
    lines = [line for line in (tmp_path / "fod.txt").read_text().splitlines() if not line.startswith("#")]
    assert len(lines) == penny.n_nodes
    assert len(lines[0].split()) == 13
    back = io.read_fod(tmp_path / "fod.txt", penny)
    assert np.array_equal(back.values, fod.values)
    with pytest.raises(InvalidError):
        io.read_fod(tmp_path / "fod.txt", FractureMesh.from_arrays(np.eye(3), [[0, 1, 2]]))


def test_recombination_file(tmp_path):
    g = np.array([0.6, 0.0, -0.2 + 0.3j])
    io.write_recombination(tmp_path / "rec.txt", 4, np.array([0, 27, 5]), g)
    q, sources, back = io.read_recombination(tmp_path / "rec.txt")
    assert q == 4
    assert sources.tolist() == [0, 27, 5]
    assert np.array_equal(back, g)


def test_report_file(tmp_path):
    report = {"run": {"preset": "zebra-mini", "seed": 0}, "fod": {"Q": 12, "alpha": 1.5e-3}}
    io.write_report(tmp_path / "report.toml", report)
    assert io.read_report(tmp_path / "report.toml") == report
    with pytest.raises(NotFoundError):
        io.read_report(tmp_path / "missing.toml")
