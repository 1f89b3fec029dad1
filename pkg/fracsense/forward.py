# Copyright Fracsense Authors 2026
"""Synthetic scattering data for a fracture with a linear-slip contact law.

The scattered displacement is the double-layer potential of the fracture opening displacement
(FOD) ``⟦u⟧`` (jump from the side opposite the normal to the side the normal points into)::

    ũ_k(ξ) = -∫_Γ Σ_ijk(ξ, x) n_j(x) ⟦u⟧_i(x) dS_x

Its traction on the fracture is written through the tangential operator ``D`` so that the
host-element integral only has Cauchy principal value strength::

    ∂_s ũ_k(ξ) = ∫_Γ -Σ_ijk n_j ∂_s^Γ⟦u⟧_i + Σ_ijk ∂_j^Γ⟦u⟧_i n_s + ρω² U_ki ⟦u⟧_i n_s dS_x

The traction operator ``T`` maps nodal FOD values onto ``n·C:∇ũ`` at collocation points, and the
contact law gives ``(K - T) ⟦u⟧ = t^i``.
"""
import functools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse

from fracsense_utils.thread_utils import chunked, ordered_map

from .config import config, logger
from .exception import AssemblyError, DomainError, InvalidError, SolverError
from .kernels import (
    ElasticMedium,
    IncidentPlaneWave,
    eval_plane_wave,
    greens_fields,
    greens_stress,
    kelvin_stress,
    spherical_basis,
    traction,
)
from .mesh import (
    QUAD_CORNERS,
    TRI_CORNERS,
    CollocationSet,
    FodVector,
    FractureMesh,
    QuadraturePoints,
    SurfaceSample,
    adaptive_quadrature,
    gauss_legendre_unit,
    interior_collocation,
)

FORWARD_RESIDUAL_TOL = 1e-8
SCATTERED_NEAR_RATIO = 3.0
SCATTERED_MAX_DEPTH = 20
_ROW_CHUNK = 16


@dataclass(frozen=True, eq=False)
class StiffnessField:
    """Complex symmetric specific-stiffness matrices in the local frame ``(n, e1, e2)``, one per point."""

    points: np.ndarray
    matrices: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        matrices = np.array(self.matrices, dtype=complex).reshape(-1, 3, 3)
        if len(points) != len(matrices):
            raise InvalidError(f"Got {len(matrices)} stiffness matrices for {len(points)} points")
        scale = max(1.0, float(np.abs(matrices).max(initial=0.0)))
        if not np.allclose(matrices, np.swapaxes(matrices, -1, -2), atol=1e-12 * scale):
            raise InvalidError("Specific stiffness must be symmetric")
        if np.any(matrices.imag > 1e-12 * scale):
            raise InvalidError("Specific stiffness must satisfy Im(K) <= 0 (dissipative interface)")
        points.setflags(write=False)
        matrices.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "matrices", matrices)

    @classmethod
    def diagonal(cls, points, k_n, k_s1, k_s2) -> "StiffnessField":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        diag = np.stack(np.broadcast_arrays(*(np.asarray(k, dtype=complex) for k in (k_n, k_s1, k_s2))), axis=-1)
        diag = np.broadcast_to(diag, (len(points), 3))
        return cls(points, np.einsum("ni,ij->nij", diag, np.eye(3)))

    @classmethod
    def normal_shear(cls, points, k_n, k_s) -> "StiffnessField":
        """``diag(κ_n, κ_s, κ_s)``: one normal and one isotropic shear stiffness."""
        return cls.diagonal(points, k_n, k_s, k_s)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def components(self) -> np.ndarray:
        """Diagonal entries ``(k_n, k_s1, k_s2)``."""
        return np.diagonal(self.matrices, axis1=-2, axis2=-1)

    def global_matrices(self, frames: np.ndarray) -> np.ndarray:
        return np.einsum("nai,nab,nbj->nij", frames, self.matrices, frames)


@dataclass(frozen=True, eq=False)
class TractionSystem:
    """``T`` of shape ``(3 N_col, 3 N_nds)``: global traction components per row, node-major FOD columns."""

    mesh: FractureMesh
    colloc: CollocationSet
    matrix: np.ndarray

    @property
    def free(self) -> np.ndarray:
        """Columns of the unknowns left after pinning the edge nodes."""
        return self.matrix[:, self.mesh.free_dofs]

    @functools.cached_property
    def svd(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Thin SVD ``(U, s, Vh)`` of the free columns, singular values nonincreasing."""
        return np.linalg.svd(self.free, full_matrices=False)

    def apply(self, fod: FodVector) -> np.ndarray:
        return self.matrix @ fod.values.ravel()


def _subset(qp: QuadraturePoints, mask: np.ndarray) -> QuadraturePoints:
    return QuadraturePoints(SurfaceSample(*(f[mask] for f in qp.sample)), qp.weights[mask])


def _gradient_terms(xi, sample: SurfaceSample, weights, med: ElasticMedium, omega: float, scale: float):
    """Weighted integrand of ``∂_s ũ_k`` per quadrature point, node slot and FOD component: ``[q, a, i, k, s]``."""
    U, S = greens_fields(xi, sample.x, med, omega, scale)
    n, g, N = sample.normal, sample.grad_shape, sample.shape
    P = np.einsum("qijk,qj->qik", S, n)
    Q = np.einsum("qijk,qaj->qaik", S, g)
    terms = (
        -np.einsum("qik,qas->qaiks", P, g)
        + np.einsum("qaik,qs->qaiks", Q, n)
        + med.rho * omega**2 * np.einsum("qki,qa,qs->qaiks", U, N, n)
    )
    return terms * weights[:, None, None, None, None]


def _scatter_to_nodes(nodes: np.ndarray, slot_values: np.ndarray, n_nodes: int) -> np.ndarray:
    """Sum ``slot_values[q, a, ...]`` into the node each slot refers to."""
    tail = slot_values.shape[2:]
    flat = slot_values.reshape(nodes.size, int(np.prod(tail)))
    assembly = scipy.sparse.coo_matrix(
        (np.ones(nodes.size), (nodes.ravel(), np.arange(nodes.size))), shape=(n_nodes, nodes.size)
    ).tocsr()
    return (assembly @ flat).reshape((n_nodes,) + tail)


def _host_duffy(mesh: FractureMesh, colloc: SurfaceSample, c: int, med: ElasticMedium, omega: float, order: int):
    """CPV of the gradient integrand over the element hosting collocation point `c`, per node slot.

    The element is split into triangles joining the point to each edge. On each triangle the static
    ``1/ρ²`` part of the kernel is integrated in closed form along rays, with the spherical exclusion
    ``|x - ξ| > ε`` expressed in reference coordinates through the tangent map at the point.
    """
    elem = int(colloc.elements[c])
    p0 = colloc.st[c]
    xi = colloc.x[c]
    n0, g0, jac0, J = colloc.normal[c], colloc.grad_shape[c], colloc.jac[c], colloc.tangents[c]
    corners = TRI_CORNERS[:3] if mesh.is_tri[elem] else QUAD_CORNERS
    u, wu = gauss_legendre_unit(order)
    v, wv = u, wu
    scale = mesh.diameter
    total = np.zeros((4, 3, 3, 3), dtype=complex)
    for v1, v2 in zip(corners, np.roll(corners, -1, axis=0)):
        d1, d2 = v1 - p0, v2 - v1
        det = abs(d1[0] * d2[1] - d1[1] * d2[0])
        e = d1 + v[:, None] * d2
        pts = p0 + u[:, None, None] * e[None, :, :]
        sample = mesh.sample(np.full(pts.shape[0] * pts.shape[1], elem), pts.reshape(-1, 2))
        weights = (np.outer(wu * u, wv) * det).ravel() * sample.jac
        total += _gradient_terms(xi, sample, weights, med, omega, scale).sum(axis=0)

        # leading static part along each ray, F(ξ + ρ J e) ~ F0(e) / ρ²
        phys = e @ J.T
        S0 = kelvin_stress(xi, xi + phys, med, scale)
        P0 = np.einsum("vijk,j->vik", S0, n0)
        Q0 = np.einsum("vijk,aj->vaik", S0, g0)
        F0 = jac0 * (-np.einsum("vik,as->vaiks", P0, g0) + np.einsum("vaik,s->vaiks", Q0, n0))
        ray = np.log(np.linalg.norm(phys, axis=-1)) - np.sum(wu / u)
        total += det * np.einsum("v,vaiks->aiks", wv * ray, F0)
    return total


def _host_integral(mesh, colloc: SurfaceSample, c: int, med, omega) -> np.ndarray:
    order = config["singular_order"]
    tol = config["singular_tolerance"]
    previous = _host_duffy(mesh, colloc, c, med, omega, order)
    for level in (2, 4):
        current = _host_duffy(mesh, colloc, c, med, omega, level * order)
        change = np.linalg.norm(current - previous) / max(np.linalg.norm(current), 1e-300)
        if change <= tol:
            return current
        previous = current
    raise AssemblyError(
        f"Host-element quadrature for collocation point {c} (element {colloc.elements[c]}) did not converge: "
        f"relative change {change:.2e} at order {4 * order}"
    )


def _gradient_operator(mesh, colloc: SurfaceSample, c: int, med, omega) -> np.ndarray:
    """``G[node, i, k, s]``: ``∂_s ũ_k`` at collocation point `c` per nodal FOD component."""
    xi = colloc.x[c]
    host = colloc.elements[c]
    scale = mesh.diameter
    near = np.linalg.norm(mesh.element_centers - xi, axis=-1) < config["near_field_ratio"] * mesh.element_diameters
    near[host] = False
    quad = mesh.quadrature
    far = _subset(quad, ~near[quad.sample.elements] & (quad.sample.elements != host))
    G = np.zeros((mesh.n_nodes, 3, 3, 3), dtype=complex)
    if len(far.weights):
        G += _scatter_to_nodes(
            far.sample.nodes, _gradient_terms(xi, far.sample, far.weights, med, omega, scale), mesh.n_nodes
        )
    if near.any():
        cells, unresolved = adaptive_quadrature(
            mesh, xi, np.flatnonzero(near), config["near_field_ratio"], config["subdivision_depth"],
            config["quadrature_order"],
        )
        if unresolved:
            logger.debug(f"Collocation point {c}: near-element subdivision stopped at maximum depth")
        G += _scatter_to_nodes(
            cells.sample.nodes, _gradient_terms(xi, cells.sample, cells.weights, med, omega, scale), mesh.n_nodes
        )
    np.add.at(G, colloc.nodes[c], _host_integral(mesh, colloc, c, med, omega))
    return G


def _traction_rows(G: np.ndarray, n: np.ndarray, med: ElasticMedium) -> np.ndarray:
    """``t_α = λ n_α ∂_k ũ_k + μ (∂_s ũ_α + ∂_α ũ_s) n_s`` as three rows over node-major unknowns."""
    div = np.einsum("nikk->ni", G)
    rows = med.lam * np.einsum("a,ni->ani", n, div) + med.mu * (
        np.einsum("niak,k->ani", G, n) + np.einsum("nika,k->ani", G, n)
    )
    return rows.reshape(3, -1)


def assemble_T(
    mesh: FractureMesh, colloc: CollocationSet, med: ElasticMedium, omega: float, threads: Optional[int] = None
) -> TractionSystem:
    """Dense traction operator, assembled in parallel over blocks of collocation points."""
    if colloc.mesh is not mesh:
        raise InvalidError("Collocation points belong to a different mesh")
    threads = config["threads"] if threads is None else threads
    sample = colloc.sample
    # warm cached geometry before the pool touches it
    _ = (mesh.quadrature, mesh.element_centers, mesh.element_diameters, mesh.diameter)

    def rows(block: range) -> np.ndarray:
        return np.concatenate(
            [_traction_rows(_gradient_operator(mesh, sample, c, med, omega), sample.normal[c], med) for c in block]
        )

    blocks = chunked(colloc.n_points, _ROW_CHUNK)
    matrix = np.concatenate(ordered_map(rows, blocks, threads))
    logger.info(f"Assembled traction operator {matrix.shape[0]}x{matrix.shape[1]} ({colloc.n_points} points)")
    return TractionSystem(mesh=mesh, colloc=colloc, matrix=matrix)


def incident_tractions(
    colloc: CollocationSet, incident: Sequence[IncidentPlaneWave], med: ElasticMedium
) -> np.ndarray:
    """``t^i`` at the collocation points, shape ``(3 N_col, N_inc)`` in the global frame."""
    sample = colloc.sample
    cols = []
    for w in incident:
        _, grad = eval_plane_wave(w, med, sample.x)
        cols.append(traction(grad, sample.normal, med).ravel())
    return np.stack(cols, axis=-1)


def contact_matrix(system: TractionSystem, K: StiffnessField) -> np.ndarray:
    """``K - T`` on the free unknowns; ``K`` acts on the FOD interpolated at each collocation point."""
    colloc = system.colloc
    if K.n_points != colloc.n_points or not np.allclose(K.points, colloc.points, atol=1e-9 * system.mesh.diameter):
        raise InvalidError("Stiffness field is not sampled at the collocation points of the traction system")
    Kg = K.global_matrices(colloc.frames)
    interp = colloc.interpolation_matrix()
    Kfull = np.einsum("cai,cn->cani", Kg, interp).reshape(3 * colloc.n_points, -1)
    return (Kfull - system.matrix)[:, system.mesh.free_dofs]


def solve_least_squares(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, float]:
    """Solve ``A x = b`` (least squares when non-square); returns ``x`` and the relative residual.

    For overdetermined systems the residual is that of the normal equations.
    """
    x, _, rank, s = np.linalg.lstsq(A, b, rcond=None)
    if rank < A.shape[1]:
        cond = s[0] / s[-1] if s[-1] > 0 else np.inf
        raise SolverError(f"Contact system is rank deficient (rank {rank} of {A.shape[1]})", condition_number=cond)
    r = A @ x - b
    if A.shape[0] == A.shape[1]:
        residual = np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300)
    else:
        residual = np.linalg.norm(A.conj().T @ r) / max(np.linalg.norm(A.conj().T @ b), 1e-300)
    return x, float(residual)


def solve_forward_system(
    system: TractionSystem, K: StiffnessField, incident: Sequence[IncidentPlaneWave], med: ElasticMedium
) -> Tuple[List[FodVector], float]:
    """FOD for every incident wave, and the worst relative residual."""
    mesh = system.mesh
    A = contact_matrix(system, K)
    rhs = incident_tractions(system.colloc, incident, med)
    X, residual = solve_least_squares(A, rhs)
    if residual > FORWARD_RESIDUAL_TOL:
        logger.warning(f"Forward solve residual {residual:.2e} exceeds {FORWARD_RESIDUAL_TOL:.0e}")
    logger.info(f"Forward solve: {A.shape[0]}x{A.shape[1]} system, {len(incident)} incident fields")
    return [FodVector.from_free(mesh, X[:, j]) for j in range(X.shape[1])], residual


def solve_forward(
    mesh: FractureMesh,
    K: StiffnessField,
    incident: Sequence[IncidentPlaneWave],
    med: ElasticMedium,
    omega: float,
    colloc: Optional[CollocationSet] = None,
    system: Optional[TractionSystem] = None,
) -> List[FodVector]:
    for w in incident:
        if w.omega != omega:
            raise InvalidError(f"Incident wave at omega={w.omega} does not match the solve frequency {omega}")
    if system is None:
        colloc = colloc or interior_collocation(mesh, 4)
        system = assemble_T(mesh, colloc, med, omega)
    fods, _ = solve_forward_system(system, K, incident, med)
    return fods


@dataclass(frozen=True, eq=False)
class ObservationGrid:
    """Directions on the unit sphere: Gauss-Legendre nodes in ``cos θ`` times a uniform ``φ`` grid.

    Directions are ordered ``θ``-major; the weights integrate over the sphere (they sum to ``4π``).
    """

    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise InvalidError(f"Grid needs at least one node per angle, got {self.n_theta}x{self.n_phi}")

    @functools.cached_property
    def _nodes(self):
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x[::-1])
        phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        weights = np.outer(w[::-1], np.full(self.n_phi, 2 * np.pi / self.n_phi))
        return tt.ravel(), pp.ravel(), weights.ravel()

    @property
    def theta(self) -> np.ndarray:
        return self._nodes[0]

    @property
    def phi(self) -> np.ndarray:
        return self._nodes[1]

    @property
    def weights(self) -> np.ndarray:
        return self._nodes[2]

    @property
    def directions(self) -> np.ndarray:
        t, p = self.theta, self.phi
        return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi


@dataclass(frozen=True, eq=False)
class FarFieldDataset:
    """Multistatic far-field data: intrinsic amplitudes ``(a_p, a_θ, a_φ)`` per incident field and direction."""

    grid: ObservationGrid
    omega: float
    amplitudes: np.ndarray  # (n_inc, n_obs, 3)
    incident: Tuple[IncidentPlaneWave, ...] = ()

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.ndim == 2:
            amplitudes = amplitudes[None]
        if amplitudes.shape[1:] != (self.grid.size, 3):
            raise InvalidError(f"Amplitudes must have shape (n_inc, {self.grid.size}, 3), got {amplitudes.shape}")
        if self.incident and len(self.incident) != len(amplitudes):
            raise InvalidError(f"{len(self.incident)} incident fields for {len(amplitudes)} records")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "incident", tuple(self.incident))

    @property
    def n_incident(self) -> int:
        return len(self.amplitudes)

    def records(self) -> np.ndarray:
        """``(n_inc, 3 n_obs)``, observation-major."""
        return self.amplitudes.reshape(self.n_incident, -1)

    @property
    def up(self) -> np.ndarray:
        return self.amplitudes[..., 0:1] * self.grid.directions

    @property
    def us(self) -> np.ndarray:
        theta_hat, phi_hat = spherical_basis(self.grid.directions)
        return self.amplitudes[..., 1:2] * theta_hat + self.amplitudes[..., 2:3] * phi_hat

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.amplitudes) ** 2)))

    def with_amplitudes(self, amplitudes) -> "FarFieldDataset":
        return FarFieldDataset(self.grid, self.omega, amplitudes, self.incident)


def farfield_matrix(mesh: FractureMesh, directions, med: ElasticMedium, omega: float) -> np.ndarray:
    """``(3 N_obs, 3 N_nds)`` map from nodal FOD to intrinsic far-field amplitudes, observation-major rows."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    k_p, k_s = med.wavenumbers(omega)
    quad = mesh.quadrature
    x, n, w = quad.sample.x, quad.sample.normal, quad.weights
    theta_hat, phi_hat = spherical_basis(directions)
    en = directions @ n.T  # (o, q)
    ep = np.exp(-1j * k_p * (directions @ x.T)) * w
    es = np.exp(-1j * k_s * (directions @ x.T)) * w
    rows = np.empty((len(directions), 3, len(w), 3), dtype=complex)
    rows[:, 0] = -1j * k_p * (2 * med.mu * en[..., None] * directions[:, None, :] + med.lam * n[None]) * ep[..., None]
    for c, t in ((1, theta_hat), (2, phi_hat)):
        tn = t @ n.T
        rows[:, c] = (
            -1j
            * k_s
            * med.mu
            * (en[..., None] * t[:, None, :] + tn[..., None] * directions[:, None, :])
            * es[..., None]
        )
    weights = scipy.sparse.coo_matrix(
        (quad.sample.shape.ravel(), (np.repeat(np.arange(len(w)), 4), quad.sample.nodes.ravel())),
        shape=(len(w), mesh.n_nodes),
    ).tocsr()
    # contract quadrature points against the shape-weight matrix: (o, c, i, q) @ (q, node)
    out = (weights.T @ rows.transpose(2, 0, 1, 3).reshape(len(w), -1)).reshape(mesh.n_nodes, len(directions), 3, 3)
    return out.transpose(1, 2, 0, 3).reshape(3 * len(directions), 3 * mesh.n_nodes)


def farfield_from_fod(
    mesh: FractureMesh, fod, grid: ObservationGrid, med: ElasticMedium, omega: float
) -> FarFieldDataset:
    """Far-field patterns of one FOD or a list of FODs (one record each)."""
    fods = [fod] if isinstance(fod, FodVector) else list(fod)
    M = farfield_matrix(mesh, grid.directions, med, omega)
    values = np.stack([f.values.ravel() for f in fods], axis=-1)
    amplitudes = (M @ values).T.reshape(len(fods), grid.size, 3)
    return FarFieldDataset(grid=grid, omega=omega, amplitudes=amplitudes)


def scattered_field_at(mesh: FractureMesh, fod: FodVector, xi, med: ElasticMedium, omega: float) -> np.ndarray:
    """Double-layer potential at a point off the fracture."""
    xi = np.asarray(xi, dtype=float)
    cells, unresolved = adaptive_quadrature(
        mesh, xi, np.arange(mesh.n_elements), SCATTERED_NEAR_RATIO, SCATTERED_MAX_DEPTH, config["quadrature_order"]
    )
    if unresolved:
        raise DomainError(f"Point {xi.tolist()} lies on the fracture surface")
    S = greens_stress(xi, cells.sample.x, med, omega, mesh.diameter)
    jump = fod.at(cells.sample)
    return -np.einsum("q,qijk,qj,qi->k", cells.weights, S, cells.sample.normal, jump)


def add_noise(data: FarFieldDataset, level: float, seed: int) -> FarFieldDataset:
    """Complex Gaussian noise on the intrinsic amplitudes with RMS ``level`` times the data RMS."""
    if level < 0:
        raise InvalidError(f"Noise level must be non-negative, got {level}")
    if level == 0:
        return data
    rng = np.random.default_rng(seed)
    shape = data.amplitudes.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return data.with_amplitudes(data.amplitudes + level * data.rms() * noise)


def excitation_waves(grid: ObservationGrid, omega: float) -> List[IncidentPlaneWave]:
    """Unit P, S(θ̂) and S(φ̂) plane waves along every grid direction, in that order per direction."""
    theta_hat, phi_hat = spherical_basis(grid.directions)
    waves = []
    for d, t, p in zip(grid.directions, theta_hat, phi_hat):
        waves.append(IncidentPlaneWave.p_wave(d, omega))
        waves.append(IncidentPlaneWave.s_wave(d, t, omega))
        waves.append(IncidentPlaneWave.s_wave(d, p, omega))
    return waves


def energy_proxy(data: FarFieldDataset, med: ElasticMedium) -> np.ndarray:
    """Radiated energy per record: ``∫ k_p |u_p|²/(λ+2μ) + k_s |u_s|²/μ`` over the sphere."""
    k_p, k_s = med.wavenumbers(data.omega)
    a = np.abs(data.amplitudes) ** 2
    density = k_p * a[..., 0] / (med.lam + 2 * med.mu) + k_s * (a[..., 1] + a[..., 2]) / med.mu
    return density @ data.grid.weights
