# Copyright Fracsense Authors 2026
"""Fracture opening displacement from far-field data on a known (or reconstructed) surface."""
import functools
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .config import logger
from .exception import InvalidError, SolverError
from .forward import ObservationGrid, farfield_matrix, incident_tractions
from .kernels import ElasticMedium, IncidentPlaneWave
from .mesh import CollocationSet, FodVector, FractureMesh
from .regularization import RegularizedSolution, SvdFactors, morozov_tikhonov

DEFAULT_Q_RATIO = 0.15


@dataclass(frozen=True, eq=False)
class FodSystem:
    """``M`` of shape ``(3 N_obs, 3 N_free)`` from free nodal FOD to intrinsic far-field amplitudes."""

    mesh: FractureMesh
    grid: ObservationGrid
    matrix: np.ndarray
    q_ratio: float = DEFAULT_Q_RATIO

    @functools.cached_property
    def factors(self) -> SvdFactors:
        return SvdFactors(self.matrix)

    @property
    def singular_values(self) -> np.ndarray:
        return self.factors.s

    @property
    def Q(self) -> int:
        """Number of singular values at most ``q_ratio`` times the largest."""
        s = self.singular_values
        return int(np.count_nonzero(s <= self.q_ratio * s[0]))

    @property
    def decay(self) -> float:
        s = self.singular_values
        return float(s[-1] / s[0])

    def suppressed_left(self) -> np.ndarray:
        """Left singular vectors of the ``Q`` smallest singular values, as columns."""
        return self.factors.U[:, len(self.singular_values) - self.Q :]

    def suppressed_right(self) -> np.ndarray:
        return self.factors.Vh[len(self.singular_values) - self.Q :].conj().T

    def apply(self, fod: FodVector) -> np.ndarray:
        return self.matrix @ fod.free_vector()


def assemble_M(
    gamma_breve: FractureMesh, grid: ObservationGrid, med: ElasticMedium, omega: float, q_ratio: float = DEFAULT_Q_RATIO
) -> FodSystem:
    n_free = len(gamma_breve.free_nodes)
    if n_free == 0:
        raise InvalidError("Mesh has no interior nodes to carry an opening displacement")
    if n_free >= grid.size:
        raise InvalidError(
            f"FOD system is underdetermined: {n_free} free nodes need more than {grid.size} observation directions"
        )
    if not 0 < q_ratio < 1:
        raise InvalidError(f"Q ratio must lie in (0, 1), got {q_ratio}")
    matrix = farfield_matrix(gamma_breve, grid.directions, med, omega)[:, gamma_breve.free_dofs]
    system = FodSystem(gamma_breve, grid, matrix, q_ratio)
    logger.info(f"FOD system {matrix.shape[0]}x{matrix.shape[1]}: Q={system.Q}, decay {system.decay:.2e}")
    return system


def solve_fod(sys: FodSystem, data: np.ndarray, noise_delta: float) -> Tuple[FodVector, RegularizedSolution]:
    if noise_delta <= 0:
        raise InvalidError(f"Noise level must be positive, got {noise_delta}")
    data = np.asarray(data, dtype=complex).ravel()
    if data.shape != (sys.matrix.shape[0],):
        raise InvalidError(f"Far-field vector has {data.size} entries, the FOD system expects {sys.matrix.shape[0]}")
    solution = morozov_tikhonov(sys.factors, data, noise_delta)
    return FodVector.from_free(sys.mesh, solution.x), solution


def recover_fod(sys: FodSystem, data: np.ndarray, noise_delta: float) -> FodVector:
    """Tikhonov solution with the Morozov discrepancy ``‖M x - data‖ = noise_delta ‖data‖``."""
    return solve_fod(sys, data, noise_delta)[0]


def recombine_sources(sys: FodSystem, datasets) -> Tuple[np.ndarray, np.ndarray]:
    """Unit-norm weights ``g`` whose combined data avoids the ``Q`` suppressed left singular vectors.

    With ``P <= Q`` records, ``g`` minimizes ``‖U_Qᴴ D g‖``; with more, the first ``Q + 1`` records
    give an exact null vector and the rest get zero weight. The largest weight is made real positive.
    """
    D = np.asarray(datasets, dtype=complex)
    if D.ndim != 2 or D.shape[1] != sys.matrix.shape[0]:
        raise InvalidError(f"Expected (P, {sys.matrix.shape[0]}) far-field records, got {D.shape}")
    P, Q = len(D), sys.Q
    if P < 2:
        raise InvalidError(f"Recombination needs at least 2 records, got {P}")
    if Q < 1:
        raise InvalidError("No suppressed singular values: nothing to recombine against")
    A = sys.suppressed_left().conj().T @ D.T  # (Q, P)
    g = np.zeros(P, dtype=complex)
    if P <= Q:
        g[:] = np.linalg.svd(A)[2][-1].conj()
    else:
        g[: Q + 1] = np.linalg.svd(A[:, : Q + 1])[2][-1].conj()
    lead = g[np.argmax(np.abs(g))]
    g *= abs(lead) / lead
    combined = D.T @ g
    if np.linalg.norm(combined) <= 1e-14 * np.linalg.norm(D):
        raise SolverError("Recombined data vanishes: the records are linearly dependent")
    logger.info(f"Recombined {P} records against Q={Q} suppressed modes")
    return g, combined


def recombined_incident_traction(
    waves: Sequence[IncidentPlaneWave], g, colloc: CollocationSet, med: ElasticMedium
) -> np.ndarray:
    """``Σ_p g_p t^{i,p}`` at the collocation points, global frame, ``3 N_col`` entries."""
    g = np.asarray(g, dtype=complex)
    if len(waves) != len(g):
        raise InvalidError(f"{len(waves)} incident fields for {len(g)} weights")
    return incident_tractions(colloc, waves, med) @ g


def suppressed_energy_fraction(sys: FodSystem, fod: FodVector) -> float:
    """Share of the FOD energy in the span of the ``Q`` suppressed right singular vectors."""
    x = fod.free_vector()
    norm2 = float(np.vdot(x, x).real)
    if norm2 == 0:
        return 0.0
    coeffs = sys.suppressed_right().conj().T @ x
    return float(np.vdot(coeffs, coeffs).real) / norm2
