# Copyright Fracsense Authors 2026
import numpy as np
import pytest

from fracsense.exception import InvalidError, SolverError
from fracsense.fod_inversion import (
    FodSystem,
    assemble_M,
    recombine_sources,
    recombined_incident_traction,
    recover_fod,
    solve_fod,
    suppressed_energy_fraction,
)
from fracsense.forward import ObservationGrid, incident_tractions
from fracsense.kernels import IncidentPlaneWave
from fracsense.mesh import FodVector, FractureMesh, build_penny, interior_collocation


def _designed_system(mesh, n_small, grid=None, seed=0):
    """System with ``n_small`` singular values well below the Q ratio."""
    grid = grid or ObservationGrid(6, 4)
    rows, cols = 3 * grid.size, len(mesh.free_dofs)
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols)))
    V, _ = np.linalg.qr(rng.normal(size=(cols, cols)))
    s = np.concatenate([np.linspace(1.0, 0.5, cols - n_small), np.full(n_small, 1e-3)])
    return FodSystem(mesh, grid, (U * s) @ V.T)


def test_assemble_M_shapes(medium):
    mesh = build_penny(0.5, 2)
    grid = ObservationGrid(6, 4)
    system = assemble_M(mesh, grid, medium, 2.0)
    assert system.matrix.shape == (3 * grid.size, len(mesh.free_dofs))
    assert np.all(np.diff(system.singular_values) <= 0)
    assert 0 < system.decay < 1
    assert system.Q == np.count_nonzero(system.singular_values <= 0.15 * system.singular_values[0])


def test_assemble_M_rejects_bad_input(medium, penny):
    with pytest.raises(InvalidError, match="underdetermined"):
        assemble_M(penny, ObservationGrid(2, 4), medium, 2.0)
    triangle = FractureMesh.from_arrays(np.eye(3), [[0, 1, 2]])
    with pytest.raises(InvalidError, match="interior"):
        assemble_M(triangle, ObservationGrid(2, 4), medium, 2.0)
    with pytest.raises(InvalidError):
        assemble_M(penny, ObservationGrid(12, 8), medium, 2.0, q_ratio=1.5)


def test_recover_fod_meets_discrepancy(medium):
    mesh = build_penny(0.5, 2)
    system = assemble_M(mesh, ObservationGrid(6, 4), medium, 2.0)
    truth = FodVector.from_function(mesh, lambda x: np.outer(0.25 - np.sum(x**2, axis=-1), [0.0, 0.0, 1.0]))
    data = system.apply(truth)
    fod, solution = solve_fod(system, data, 0.01)
    assert solution.achievement == pytest.approx(1.0, abs=1e-4)
    assert np.linalg.norm(system.apply(fod) - data) == pytest.approx(0.01 * np.linalg.norm(data), rel=1e-3)
    assert np.allclose(recover_fod(system, data, 0.01).values, fod.values)
    with pytest.raises(InvalidError):
        solve_fod(system, data, 0.0)
    with pytest.raises(InvalidError):
        solve_fod(system, data[:-1], 0.01)


def test_recombination_with_more_records_than_suppressed_modes(penny):
    system = _designed_system(penny, n_small=3)
    assert system.Q == 3
    D = np.random.default_rng(4).normal(size=(6, system.matrix.shape[0]))
    g, combined = recombine_sources(system, D)
    assert np.linalg.norm(g) == pytest.approx(1.0)
    assert np.all(g[4:] == 0)
    lead = g[np.argmax(np.abs(g))]
    assert lead.imag == pytest.approx(0.0, abs=1e-14) and lead.real > 0
    assert np.allclose(combined, D.T @ g)
    assert np.linalg.norm(system.suppressed_left().conj().T @ combined) < 1e-10 * np.linalg.norm(combined)


def test_recombination_with_few_records(penny):
    system = _designed_system(penny, n_small=4)
    D = np.random.default_rng(5).normal(size=(3, system.matrix.shape[0]))
    g, _ = recombine_sources(system, D)
    A = system.suppressed_left().conj().T @ D.T
    assert np.linalg.norm(A @ g) == pytest.approx(np.linalg.svd(A, compute_uv=False)[-1])


def test_recombination_rejects_bad_input(penny):
    system = _designed_system(penny, n_small=2)
    rows = system.matrix.shape[0]
    with pytest.raises(InvalidError):
        recombine_sources(system, np.ones((1, rows)))
    with pytest.raises(InvalidError):
        recombine_sources(system, np.ones((3, rows + 1)))
    with pytest.raises(InvalidError, match="suppressed"):
        recombine_sources(_designed_system(penny, n_small=0), np.ones((3, rows)))
    # records spanned by the suppressed modes alone cannot be recombined away
    U_q = system.suppressed_left()
    with pytest.raises(SolverError):
        recombine_sources(system, np.stack([U_q[:, 0], 2 * U_q[:, 0], U_q[:, 1]]))


def test_suppressed_energy_fraction(penny):
    system = _designed_system(penny, n_small=3)
    V = system.factors.Vh.conj().T
    assert suppressed_energy_fraction(system, FodVector.from_free(penny, V[:, -1])) == pytest.approx(1.0)
    assert suppressed_energy_fraction(system, FodVector.from_free(penny, V[:, 0])) == pytest.approx(0.0, abs=1e-12)
    assert suppressed_energy_fraction(system, FodVector.zeros(penny)) == 0.0


def test_recombined_incident_traction(medium, penny):
    colloc = interior_collocation(penny, 1)
    waves = [IncidentPlaneWave.p_wave([0, 0, 1.0], 2.0), IncidentPlaneWave.s_wave([1.0, 0, 0], [0, 1.0, 0], 2.0)]
    t = incident_tractions(colloc, waves, medium)
    g = np.array([0.5, 1j])
    assert np.allclose(recombined_incident_traction(waves, g, colloc, medium), t @ g)
    with pytest.raises(InvalidError):
        recombined_incident_traction(waves, [1.0], colloc, medium)


def test_recover_fod_of_zero_data(medium):
    mesh = build_penny(0.5, 2)
    system = assemble_M(mesh, ObservationGrid(6, 4), medium, 2.0)
    fod = recover_fod(system, np.zeros(system.matrix.shape[0]), 0.05)
    assert not fod.values.any()


def test_recover_fod_is_scale_equivariant(medium):
    mesh = build_penny(0.5, 2)
    system = assemble_M(mesh, ObservationGrid(6, 4), medium, 2.0)
    truth = FodVector.from_function(mesh, lambda x: np.outer(0.25 - np.sum(x**2, axis=-1), [0.2, 0.0, 1.0]))
    data = system.apply(truth)
    base = recover_fod(system, data, 0.05)
    for c in (2.0, -0.5j):
        scaled = recover_fod(system, c * data, 0.05)
        assert np.linalg.norm(scaled.values - c * base.values) <= 1e-10 * np.linalg.norm(scaled.values)
