# Copyright Fracsense Authors 2026
"""Closed-form elastodynamic quantities in an isotropic full space.

All functions broadcast over leading axes: points are arrays of shape ``(..., 3)``.
Tensor index conventions:

* ``grad_u[..., i, j] = ∂u_i/∂x_j``.
* ``greens_displacement(xi, x)[..., i, l]`` is the displacement ``u_i`` at ``xi`` due to a unit
  point force ``e_l`` at ``x``.
* ``greens_stress(xi, x)[..., i, j, l]`` is the stress ``σ_ij`` at ``xi`` due to that force; the
  force index is stored last.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import factorial

from .exception import DomainError, InvalidError

# |z| below which q(z) = ((iz - 1) e^{iz} + 1) / z^2 is summed as a power series
_SERIES_CUTOFF = 0.5
_SERIES_TERMS = 24
_COINCIDENT_TOL = 1e-12

_m = np.arange(2, _SERIES_TERMS + 2)
_Q_COEFFS = (_m - 1) * (1j**_m) / factorial(_m)
_DQ_COEFFS = ((_m - 1) * (_m - 2) * (1j**_m) / factorial(_m))[1:]
_EYE = np.eye(3)


@dataclass(frozen=True)
class ElasticMedium:
    """Isotropic elastic solid. Frequencies are passed to the kernels separately."""

    rho: float
    lam: float
    mu: float

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidError(f"Mass density must be positive, got rho={self.rho}")
        if not self.mu > 0:
            raise InvalidError(f"Shear modulus must be positive, got mu={self.mu}")
        if not self.lam + 2 * self.mu > 0:
            raise InvalidError(f"lambda + 2 mu must be positive, got lambda={self.lam}, mu={self.mu}")

    @classmethod
    def from_wave_speeds(cls, c_p: float, c_s: float, rho: float = 1.0) -> "ElasticMedium":
        if not c_p > c_s > 0:
            raise InvalidError(f"Wave speeds must satisfy c_p > c_s > 0, got c_p={c_p}, c_s={c_s}")
        mu = rho * c_s**2
        return cls(rho=rho, lam=rho * c_p**2 - 2 * mu, mu=mu)

    @property
    def c_s(self) -> float:
        return float(np.sqrt(self.mu / self.rho))

    @property
    def c_p(self) -> float:
        return float(np.sqrt((self.lam + 2 * self.mu) / self.rho))

    @property
    def poisson_ratio(self) -> float:
        return self.lam / (2 * (self.lam + self.mu))

    def wavenumbers(self, omega: float) -> Tuple[float, float]:
        """Returns ``(k_p, k_s)``."""
        return omega / self.c_p, omega / self.c_s

    def shear_wavelength(self, omega: float) -> float:
        return 2 * np.pi * self.c_s / omega


def _check_omega(omega: float):
    if not omega > 0:
        raise InvalidError(f"Angular frequency must be positive, got omega={omega}")


@dataclass(frozen=True, eq=False)
class IncidentPlaneWave:
    """Plane wave ``q_p exp(i k_p d·x) + q_s exp(i k_s d·x)``."""

    d: np.ndarray
    q_p: np.ndarray
    q_s: np.ndarray
    omega: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        q_p = np.asarray(self.q_p, dtype=float)
        q_s = np.asarray(self.q_s, dtype=float)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "q_p", q_p)
        object.__setattr__(self, "q_s", q_s)
        _check_omega(self.omega)
        if abs(np.linalg.norm(d) - 1) > 1e-10:
            raise InvalidError(f"Propagation direction must be a unit vector, got |d|={np.linalg.norm(d)}")
        if np.linalg.norm(np.cross(q_p, d)) > 1e-10 * max(1.0, np.linalg.norm(q_p)):
            raise InvalidError("P amplitude q_p must be parallel to d")
        if abs(q_s @ d) > 1e-10 * max(1.0, np.linalg.norm(q_s)):
            raise InvalidError("S amplitude q_s must be perpendicular to d")

    @classmethod
    def p_wave(cls, d, omega: float, amplitude: float = 1.0) -> "IncidentPlaneWave":
        d = np.asarray(d, dtype=float)
        return cls(d=d, q_p=amplitude * d, q_s=np.zeros(3), omega=omega)

    @classmethod
    def s_wave(cls, d, polarization, omega: float) -> "IncidentPlaneWave":
        return cls(d=np.asarray(d, dtype=float), q_p=np.zeros(3), q_s=np.asarray(polarization, float), omega=omega)


def eval_plane_wave(w: IncidentPlaneWave, med: ElasticMedium, xi) -> Tuple[np.ndarray, np.ndarray]:
    """Displacement and its exact gradient at ``xi`` (shape ``(..., 3)``)."""
    k_p, k_s = med.wavenumbers(w.omega)
    xi = np.asarray(xi, dtype=float)
    proj = xi @ w.d
    phase_p = np.exp(1j * k_p * proj)
    phase_s = np.exp(1j * k_s * proj)
    u = phase_p[..., None] * w.q_p + phase_s[..., None] * w.q_s
    grad = 1j * (
        k_p * phase_p[..., None, None] * np.outer(w.q_p, w.d) + k_s * phase_s[..., None, None] * np.outer(w.q_s, w.d)
    )
    return u, grad


def traction(grad_u, n, med: ElasticMedium) -> np.ndarray:
    """``t_i = λ tr(∇u) n_i + μ (∇u + ∇uᵀ)_ij n_j``."""
    grad_u = np.asarray(grad_u)
    n = np.asarray(n, dtype=float)
    tr = np.trace(grad_u, axis1=-2, axis2=-1)
    sym = grad_u + np.swapaxes(grad_u, -1, -2)
    return med.lam * tr[..., None] * n + med.mu * np.einsum("...ij,...j->...i", sym, n)


def _q_and_dq(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=float)
    q = np.empty(z.shape, dtype=complex)
    dq = np.empty(z.shape, dtype=complex)
    small = z < _SERIES_CUTOFF
    if small.any():
        zs = z[small]
        q[small] = np.polynomial.polynomial.polyval(zs, _Q_COEFFS)
        dq[small] = np.polynomial.polynomial.polyval(zs, _DQ_COEFFS)
    large = ~small
    if large.any():
        zl = z[large]
        e = np.exp(1j * zl)
        hm = (1j * zl - 1) * e + 1
        q[large] = hm / zl**2
        dq[large] = -e / zl - 2 * hm / zl**3
    return q, dq


def _separation(xi, x, scale: float) -> Tuple[np.ndarray, np.ndarray]:
    rvec = np.asarray(xi, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(rvec, axis=-1)
    if np.any(r < _COINCIDENT_TOL * scale):
        raise DomainError("Fundamental solution evaluated at coincident source and receiver points")
    return rvec / r[..., None], r


def _dynamic_radial(r, med: ElasticMedium, omega: float):
    """U = (A δ + B r̂⊗r̂) / (4πμ) with A = a/r, B = b/r; returns A, B and their r-derivatives."""
    k_p, k_s = med.wavenumbers(omega)
    kappa2 = (k_p / k_s) ** 2
    zs, zp = k_s * r, k_p * r
    qs, dqs = _q_and_dq(zs)
    qp, dqp = _q_and_dq(zp)
    es, ep = np.exp(1j * zs), np.exp(1j * zp)
    a = es + qs - kappa2 * qp
    b = -(es - kappa2 * ep + 3 * (qs - kappa2 * qp))
    da = 1j * k_s * es + k_s * dqs - kappa2 * k_p * dqp
    db = -(1j * k_s * es - 1j * kappa2 * k_p * ep + 3 * (k_s * dqs - kappa2 * k_p * dqp))
    return a / r, b / r, da / r - a / r**2, db / r - b / r**2


def _static_radial(r, med: ElasticMedium):
    kappa2 = med.mu / (med.lam + 2 * med.mu)
    c1, c2 = (1 + kappa2) / 2, (1 - kappa2) / 2
    return c1 / r, c2 / r, -c1 / r**2, -c2 / r**2


def _displacement(rhat, A, B, mu) -> np.ndarray:
    return (A[..., None, None] * _EYE + B[..., None, None] * np.einsum("...i,...l->...il", rhat, rhat)) / (
        4 * np.pi * mu
    )


def _stress(rhat, r, A, B, dA, dB, med: ElasticMedium) -> np.ndarray:
    # G[i, j, l] = ∂_j U_il
    rr = np.einsum("...i,...j->...ij", rhat, rhat)
    rrr = np.einsum("...ij,...l->...ijl", rr, rhat)
    G = (
        dA[..., None, None, None] * np.einsum("il,...j->...ijl", _EYE, rhat)
        + (dB - 2 * B / r)[..., None, None, None] * rrr
        + (B / r)[..., None, None, None]
        * (np.einsum("ij,...l->...ijl", _EYE, rhat) + np.einsum("jl,...i->...ijl", _EYE, rhat))
    ) / (4 * np.pi * med.mu)
    div = np.einsum("...kkl->...l", G)
    return med.lam * np.einsum("ij,...l->...ijl", _EYE, div) + med.mu * (G + np.swapaxes(G, -3, -2))


def greens_displacement(xi, x, med: ElasticMedium, omega: float, scale: float = 1.0) -> np.ndarray:
    """Outgoing Kupradze tensor ``U_il(xi, x)``.

    `scale` is the length (typically the mesh diameter) against which coincident points are detected.
    """
    _check_omega(omega)
    rhat, r = _separation(xi, x, scale)
    A, B, _, _ = _dynamic_radial(r, med, omega)
    return _displacement(rhat, A, B, med.mu)


def greens_stress(xi, x, med: ElasticMedium, omega: float, scale: float = 1.0) -> np.ndarray:
    """Stress ``Σ_ij^l(xi, x)`` of the Kupradze tensor, force index last."""
    _check_omega(omega)
    rhat, r = _separation(xi, x, scale)
    A, B, dA, dB = _dynamic_radial(r, med, omega)
    return _stress(rhat, r, A, B, dA, dB, med)


def greens_fields(xi, x, med: ElasticMedium, omega: float, scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """``(U, Σ)`` in one pass, sharing the radial functions."""
    _check_omega(omega)
    rhat, r = _separation(xi, x, scale)
    A, B, dA, dB = _dynamic_radial(r, med, omega)
    return _displacement(rhat, A, B, med.mu), _stress(rhat, r, A, B, dA, dB, med)


def kelvin_displacement(xi, x, med: ElasticMedium, scale: float = 1.0) -> np.ndarray:
    """Static (Kelvin) full-space solution, the ``omega -> 0`` limit of `greens_displacement`."""
    rhat, r = _separation(xi, x, scale)
    A, B, _, _ = _static_radial(r, med)
    return _displacement(rhat, A, B, med.mu)


def kelvin_stress(xi, x, med: ElasticMedium, scale: float = 1.0) -> np.ndarray:
    rhat, r = _separation(xi, x, scale)
    A, B, dA, dB = _static_radial(r, med)
    return _stress(rhat, r, A, B, dA, dB, med)


def farfield_stress_kernel(xi_hat, x, med: ElasticMedium, omega: float) -> Tuple[np.ndarray, np.ndarray]:
    """P and S parts of the far-field pattern of ``Σ`` as ``|xi| -> ∞`` along `xi_hat`.

    ``Σ(xi, x) ≈ P e^{i k_p r} / (4π(λ+2μ) r) + S e^{i k_s r} / (4π μ r)`` with ``r = |xi|``.
    """
    _check_omega(omega)
    k_p, k_s = med.wavenumbers(omega)
    e = np.asarray(xi_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    proj = np.einsum("...i,...i->...", e, x)
    ee = np.einsum("...i,...j->...ij", e, e)
    eee = np.einsum("...ij,...l->...ijl", ee, e)
    p_part = (
        1j
        * k_p
        * np.einsum("...ij,...l->...ijl", 2 * med.mu * ee + med.lam * _EYE, e)
        * np.exp(-1j * k_p * proj)[..., None, None, None]
    )
    s_part = (
        1j
        * k_s
        * med.mu
        * (np.einsum("il,...j->...ijl", _EYE, e) + np.einsum("jl,...i->...ijl", _EYE, e) - 2 * eee)
        * np.exp(-1j * k_s * proj)[..., None, None, None]
    )
    return p_part, s_part


def spherical_basis(directions) -> Tuple[np.ndarray, np.ndarray]:
    """Unit vectors ``(θ̂, φ̂)`` transverse to each direction. At the poles φ is taken as 0."""
    e = np.asarray(directions, dtype=float)
    theta = np.arccos(np.clip(e[..., 2], -1.0, 1.0))
    phi = np.arctan2(e[..., 1], e[..., 0])
    theta_hat = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=-1)
    phi_hat = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    return theta_hat, phi_hat


@dataclass(frozen=True, eq=False)
class FarFieldSample:
    """P (radial) and S (transverse) far-field patterns at one observation direction."""

    xi_hat: np.ndarray
    up_inf: np.ndarray
    us_inf: np.ndarray

    @classmethod
    def from_intrinsic(cls, xi_hat, amplitudes) -> "FarFieldSample":
        """Build from ``(a_p, a_θ, a_φ)``: ``up = a_p ξ̂``, ``us = a_θ θ̂ + a_φ φ̂``."""
        xi_hat = np.asarray(xi_hat, dtype=float)
        theta_hat, phi_hat = spherical_basis(xi_hat)
        a = np.asarray(amplitudes)
        return cls(xi_hat=xi_hat, up_inf=a[0] * xi_hat, us_inf=a[1] * theta_hat + a[2] * phi_hat)

    def intrinsic(self) -> np.ndarray:
        theta_hat, phi_hat = spherical_basis(self.xi_hat)
        return np.array([self.up_inf @ self.xi_hat, self.us_inf @ theta_hat, self.us_inf @ phi_hat])


def penny_pattern_intrinsic(directions, z, n, med: ElasticMedium, omega: float) -> np.ndarray:
    """Intrinsic ``(a_p, a_θ, a_φ)`` of the vanishing penny test pattern.

    `directions` has shape ``(N, 3)``, `z` has shape ``(..., 3)``; returns ``(..., N, 3)``.
    """
    _check_omega(omega)
    k_p, k_s = med.wavenumbers(omega)
    e = np.asarray(directions, dtype=float)
    n = np.asarray(n, dtype=float)
    z = np.asarray(z, dtype=float)
    theta_hat, phi_hat = spherical_basis(e)
    n_e = e @ n
    proj = z @ e.T
    out = np.empty(proj.shape + (3,), dtype=complex)
    out[..., 0] = -1j * k_p * (med.lam + 2 * med.mu * n_e**2) * np.exp(-1j * k_p * proj)
    s_common = -2j * med.mu * k_s * n_e * np.exp(-1j * k_s * proj)
    out[..., 1] = s_common * (theta_hat @ n)
    out[..., 2] = s_common * (phi_hat @ n)
    return out


def penny_test_pattern(xi_hat, z, n, med: ElasticMedium, omega: float) -> FarFieldSample:
    """Far-field pattern of a vanishing penny-shaped fracture at `z` with normal `n` and unit opening along `n`."""
    xi_hat = np.asarray(xi_hat, dtype=float)
    if abs(np.linalg.norm(xi_hat) - 1) > 1e-10 or abs(np.linalg.norm(n) - 1) > 1e-10:
        raise InvalidError("Observation direction and trial normal must be unit vectors")
    amplitudes = penny_pattern_intrinsic(xi_hat[None, :], z, n, med, omega)[0]
    return FarFieldSample.from_intrinsic(xi_hat, amplitudes)
