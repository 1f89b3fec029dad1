# Copyright Fracsense Authors 2026
import numpy as np
import pytest

from fracsense.exception import DomainError, InvalidError
from fracsense.kernels import (
    ElasticMedium,
    FarFieldSample,
    IncidentPlaneWave,
    eval_plane_wave,
    farfield_stress_kernel,
    greens_displacement,
    greens_fields,
    greens_stress,
    kelvin_displacement,
    kelvin_stress,
    penny_test_pattern,
    spherical_basis,
    traction,
)
from fracsense.mesh import build_penny


def _pairs(seed=0, n=10):
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-1, 1, (n, 3))
    x = rng.uniform(-1, 1, (n, 3)) + np.array([2.5, 0.0, 0.0])
    return xi, x


def test_medium_from_wave_speeds():
    med = ElasticMedium.from_wave_speeds(c_p=2.08, c_s=1.0, rho=2.0)
    assert med.mu == pytest.approx(2.0)
    assert med.c_s == pytest.approx(1.0)
    assert med.c_p == pytest.approx(2.08)
    k_p, k_s = med.wavenumbers(3.0)
    assert k_s == pytest.approx(3.0)
    assert k_p == pytest.approx(3.0 / 2.08)
    assert med.shear_wavelength(2 * np.pi) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(rho=0.0, lam=1.0, mu=1.0), dict(rho=1.0, lam=1.0, mu=-1.0), dict(rho=1.0, lam=-3.0, mu=1.0)],
)
def test_medium_rejects_nonphysical(kwargs):
    with pytest.raises(InvalidError):
        ElasticMedium(**kwargs)


def test_wave_speeds_must_be_ordered():
    with pytest.raises(InvalidError):
        ElasticMedium.from_wave_speeds(c_p=1.0, c_s=1.0)


def test_reciprocity_and_symmetry(medium):
    xi, x = _pairs()
    U = greens_displacement(xi, x, medium, 2.0)
    swapped = greens_displacement(x, xi, medium, 2.0)
    assert np.allclose(np.swapaxes(swapped, -1, -2), U, rtol=1e-12, atol=0)
    assert np.allclose(np.swapaxes(U, -1, -2), U, rtol=1e-12, atol=0)


def test_static_limit(medium):
    xi, x = _pairs(1)
    for a, b in zip(xi, x):
        r = np.linalg.norm(a - b)
        omega = 1e-6 * medium.c_s / r
        U = greens_displacement(a, b, medium, omega)
        U0 = kelvin_displacement(a, b, medium)
        assert np.linalg.norm(U - U0) <= 1e-4 * np.linalg.norm(U0)
        S = greens_stress(a, b, medium, omega)
        S0 = kelvin_stress(a, b, medium)
        assert np.linalg.norm(S - S0) <= 1e-4 * np.linalg.norm(S0)


def test_kelvin_closed_form(medium):
    xi, x = _pairs(2)
    nu = medium.poisson_ratio
    rvec = xi - x
    r = np.linalg.norm(rvec, axis=-1)
    rhat = rvec / r[:, None]
    expected = ((3 - 4 * nu) * np.eye(3) + np.einsum("ki,kl->kil", rhat, rhat)) / (
        16 * np.pi * medium.mu * (1 - nu) * r[:, None, None]
    )
    assert np.allclose(kelvin_displacement(xi, x, medium), expected, rtol=1e-10, atol=0)


def test_small_argument_series_matches_closed_form(medium):
    # r straddles the switch between series and closed form of the radial functions
    x = np.zeros(3)
    omega = 1.0
    below = greens_displacement(np.array([0.0, 0.0, 0.4999999]), x, medium, omega)
    above = greens_displacement(np.array([0.0, 0.0, 0.5000001]), x, medium, omega)
    assert np.allclose(below, above, rtol=1e-5)


def test_fields_match_separate_kernels(medium):
    xi, x = _pairs(2)
    U, S = greens_fields(xi, x, medium, 1.5)
    assert np.array_equal(U, greens_displacement(xi, x, medium, 1.5))
    assert np.array_equal(S, greens_stress(xi, x, medium, 1.5))


def test_stress_satisfies_equation_of_motion(medium):
    omega = 2.0
    xi = np.array([0.3, -0.8, 1.1])
    x = np.array([-0.2, 0.1, 0.0])
    h = 1e-3
    div = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        step = h * np.eye(3)[j]
        dS = greens_stress(xi + step, x, medium, omega) - greens_stress(xi - step, x, medium, omega)
        div += dS[:, j, :] / (2 * h)
    inertia = medium.rho * omega**2 * greens_displacement(xi, x, medium, omega)
    assert np.abs(div + inertia).max() <= 1e-5 * np.abs(inertia).max()


def test_far_field_kernel(medium):
    omega = 2.0
    k_p, k_s = medium.wavenumbers(omega)
    R = 1e3 * 2 * np.pi / k_s
    e = np.array([0.0, 0.6, 0.8])
    src = np.array([0.1, -0.2, 0.3])
    P, S = farfield_stress_kernel(e, src, medium, omega)
    approx = P * np.exp(1j * k_p * R) / (4 * np.pi * (medium.lam + 2 * medium.mu) * R)
    approx = approx + S * np.exp(1j * k_s * R) / (4 * np.pi * medium.mu * R)
    exact = greens_stress(R * e, src, medium, omega)
    assert np.linalg.norm(approx - exact) <= 0.01 * np.linalg.norm(exact)


def test_coincident_points_raise(medium):
    with pytest.raises(DomainError):
        greens_displacement(np.zeros(3), np.zeros(3), medium, 1.0)
    with pytest.raises(DomainError):
        kelvin_stress(np.ones(3), np.ones(3), medium)


def test_nonpositive_frequency_raises(medium):
    with pytest.raises(InvalidError):
        greens_stress(np.ones(3), np.zeros(3), medium, 0.0)


def test_plane_wave_validation():
    with pytest.raises(InvalidError):
        IncidentPlaneWave.s_wave([0, 0, 1.0], [0, 0.6, 0.8], 1.0)
    with pytest.raises(InvalidError):
        IncidentPlaneWave(d=[0, 0, 1.0], q_p=[1.0, 0, 0], q_s=[0, 0, 0], omega=1.0)
    with pytest.raises(InvalidError):
        IncidentPlaneWave.p_wave([0, 0, 2.0], 1.0)


def test_plane_wave_gradient(medium):
    w = IncidentPlaneWave(d=[0.6, 0.0, 0.8], q_p=[0.6, 0.0, 0.8], q_s=[0.0, 1.0, 0.0], omega=2.0)
    xi = np.array([0.2, -0.1, 0.4])
    _, grad = eval_plane_wave(w, medium, xi)
    h = 1e-6
    for j in range(3):
        up, _ = eval_plane_wave(w, medium, xi + h * np.eye(3)[j])
        down, _ = eval_plane_wave(w, medium, xi - h * np.eye(3)[j])
        assert np.allclose((up - down) / (2 * h), grad[:, j], atol=1e-7)


def test_traction_of_uniaxial_strain(medium):
    grad = np.diag([0.0, 0.0, 1.0])
    t = traction(grad, [0, 0, 1.0], medium)
    assert np.allclose(t, [0, 0, medium.lam + 2 * medium.mu])


def test_spherical_basis_orthonormal():
    rng = np.random.default_rng(3)
    e = rng.normal(size=(20, 3))
    e /= np.linalg.norm(e, axis=-1)[:, None]
    t, p = spherical_basis(e)
    frame = np.stack([e, t, p], axis=1)
    assert np.allclose(np.einsum("nij,nkj->nik", frame, frame), np.eye(3), atol=1e-12)


def test_penny_pattern_polarization(medium):
    xi_hat = np.array([0.36, 0.48, 0.8])
    sample = penny_test_pattern(xi_hat, z=[0.1, 0.0, 0.2], n=[0, 0, 1.0], med=medium, omega=2.0)
    assert np.linalg.norm(np.cross(sample.up_inf, xi_hat)) < 1e-12
    assert abs(sample.us_inf @ xi_hat) < 1e-12
    back = FarFieldSample.from_intrinsic(xi_hat, sample.intrinsic())
    assert np.allclose(back.us_inf, sample.us_inf)


def test_penny_pattern_requires_unit_vectors(medium):
    with pytest.raises(InvalidError):
        penny_test_pattern([0, 0, 2.0], [0, 0, 0], [0, 0, 1.0], medium, 1.0)


@pytest.mark.parametrize(
    "xi_hat",
    [
        [0.36, 0.48, 0.8],  # along the normal
        [0.8, 0.0, -0.36],  # in the fracture plane
        [0.6, 0.0, 0.8],
    ],
)
def test_penny_pattern_matches_quadrature_of_small_disc(medium, xi_hat):
    n = np.array([0.36, 0.48, 0.8])
    z = np.array([0.1, -0.2, 0.3])
    xi_hat = np.asarray(xi_hat) / np.linalg.norm(xi_hat)
    omega = 2.0
    disc = build_penny(1e-3, 2, center=z, normal=n)
    q = disc.quadrature
    P, S = farfield_stress_kernel(xi_hat, q.sample.x, medium, omega)
    # unit opening along n, averaged over the disc
    up = -np.einsum("q,qijk,i,j->k", q.weights, P, n, n) / q.weights.sum()
    us = -np.einsum("q,qijk,i,j->k", q.weights, S, n, n) / q.weights.sum()
    sample = penny_test_pattern(xi_hat, z, n, medium, omega)
    scale = np.linalg.norm(sample.up_inf)
    assert np.allclose(up, sample.up_inf, rtol=1e-4, atol=1e-8 * scale)
    assert np.allclose(us, sample.us_inf, rtol=1e-4, atol=1e-8 * scale)
