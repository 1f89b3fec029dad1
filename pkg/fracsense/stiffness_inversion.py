# Copyright Fracsense Authors 2026
"""Specific stiffness from a recovered FOD through the contact law ``K ⟦u⟧ = T ⟦u⟧ + t^i``.

Both sides are expressed in the local frame ``(n, e1, e2)`` of each collocation point. The
diagonal mode has one unknown per equation (``κ_n, κ_s1, κ_s2`` per point); the full mode
interpolates six symmetric-matrix parameters per node with the element shape functions.
"""
import functools
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import logger
from .exception import InvalidError, RegularizationWarning, SolverError
from .forward import TractionSystem
from .mesh import CollocationSet, FodVector
from .regularization import DiagonalFactors, RegularizedSolution, SpectralFactors, SvdFactors, regularize

MODES = ("diagonal", "full")
RELIABILITY_THRESHOLD = 0.05

# (row, column) of each full-mode parameter: nn, s1s1, s2s2, ns1, ns2, s1s2
_FULL_PARAMETERS = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
_BASIS = np.zeros((6, 3, 3))
for _p, (_i, _j) in enumerate(_FULL_PARAMETERS):
    _BASIS[_p, _i, _j] = _BASIS[_p, _j, _i] = 1.0


def truncate_T(sys: TractionSystem, fod: FodVector, delta_trunc: float) -> Tuple[int, np.ndarray]:
    """Leading-mode approximation of ``T ⟦u⟧``.

    ``N`` is the fewest right singular vectors whose span reproduces ``⟦u⟧`` within ``delta_trunc``
    (absolute, on the free unknowns); the returned action keeps the same ``N`` left modes.
    """
    if delta_trunc <= 0:
        raise InvalidError(f"Truncation threshold must be positive, got {delta_trunc}")
    U, s, Vh = sys.svd
    x = fod.free_vector()
    coeffs = Vh @ x
    captured = np.concatenate([[0.0], np.cumsum(np.abs(coeffs) ** 2)])
    residual = np.sqrt(np.maximum(np.vdot(x, x).real - captured, 0.0))
    hits = np.flatnonzero(residual <= delta_trunc)
    if len(hits):
        n = int(hits[0])
    else:
        n = len(s)
        msg = f"Truncation residual {residual[-1]:.3e} stays above {delta_trunc:.3e}; using full rank {n}"
        warnings.warn(msg, RegularizationWarning)
        logger.warning(msg)
    action = U[:, :n] @ (s[:n] * coeffs[:n])
    logger.info(f"Truncated traction operator to N={n} of {len(s)} modes")
    return n, action


def local_fod(colloc: CollocationSet, fod: FodVector) -> np.ndarray:
    """FOD interpolated at the collocation points, local-frame components ``(N_col, 3)``."""
    return np.einsum("cij,cj->ci", colloc.frames, fod.at(colloc.sample))


def to_local(colloc: CollocationSet, vector: np.ndarray) -> np.ndarray:
    """Global ``3 N_col`` traction vector to local components ``(N_col, 3)``."""
    return np.einsum("cij,cj->ci", colloc.frames, np.asarray(vector).reshape(-1, 3))


@dataclass(frozen=True, eq=False)
class StiffnessSystem:
    mode: str
    colloc: CollocationSet
    fod_at_colloc: np.ndarray  # (N_col, 3) local
    rhs: np.ndarray  # (3 N_col,) local components, point-major
    matrix: Optional[np.ndarray] = None  # full mode only: (3 N_col, 6 N_nds)
    fod_at_nodes: Optional[np.ndarray] = None  # full mode only: (N_nds, 3) local

    @property
    def coefficients(self) -> np.ndarray:
        """Diagonal of ``A`` (diagonal mode)."""
        return self.fod_at_colloc.ravel()

    @functools.cached_property
    def factors(self) -> SpectralFactors:
        if self.mode == "diagonal":
            return DiagonalFactors(self.coefficients)
        return SvdFactors(self.matrix)


def build_system(
    mode: str,
    fod_at_colloc,
    rhs,
    colloc: CollocationSet,
    fod_at_nodes=None,
) -> StiffnessSystem:
    """Contact-law system on the stiffness unknowns; `rhs` is ``T_N ⟦u⟧ + t^i`` in local components."""
    if mode not in MODES:
        raise InvalidError(f"Unknown stiffness mode '{mode}'. Must be one of {list(MODES)}")
    fod_at_colloc = np.asarray(fod_at_colloc, dtype=complex).reshape(-1, 3)
    rhs = np.asarray(rhs, dtype=complex).ravel()
    if len(fod_at_colloc) != colloc.n_points or rhs.shape != (3 * colloc.n_points,):
        raise InvalidError(
            f"Expected FOD and right-hand side on {colloc.n_points} points, got {fod_at_colloc.shape} and {rhs.shape}"
        )
    if mode == "diagonal":
        return StiffnessSystem(mode, colloc, fod_at_colloc, rhs)
    n_nodes = colloc.mesh.n_nodes
    if colloc.n_points < 2 * n_nodes:
        raise InvalidError(
            f"Full stiffness mode needs at least {2 * n_nodes} collocation points, got {colloc.n_points}; "
            "use more points per element"
        )
    if fod_at_nodes is None:
        raise InvalidError("Full stiffness mode needs the local FOD at the mesh nodes")
    # B[3c + a, 6 node + p] = N_node(c) (E_p ⟦u⟧(c))_a
    interp = colloc.interpolation_matrix()
    action = np.einsum("pab,cb->cap", _BASIS, fod_at_colloc)
    matrix = np.einsum("cn,cap->canp", interp, action).reshape(3 * colloc.n_points, 6 * n_nodes)
    nodes = np.asarray(fod_at_nodes, dtype=complex).reshape(n_nodes, 3)
    return StiffnessSystem(mode, colloc, fod_at_colloc, rhs, matrix, nodes)


@dataclass(frozen=True, eq=False)
class RecoveredStiffness:
    mode: str
    points: np.ndarray  # collocation points (diagonal) or nodes (full)
    values: np.ndarray  # (N, 3) diagonal entries, or (N, 6) full parameters
    reliability: np.ndarray  # (N,)
    component_reliability: np.ndarray  # (N, 3)
    solution: RegularizedSolution

    @property
    def matrices(self) -> np.ndarray:
        if self.mode == "diagonal":
            return np.einsum("ni,ij->nij", self.values, np.eye(3))
        return np.einsum("np,pij->nij", self.values, _BASIS)

    @property
    def components(self) -> np.ndarray:
        """``(k_n, k_s1, k_s2)`` per point."""
        return np.diagonal(self.matrices, axis1=-2, axis2=-1)

    @property
    def reliable(self) -> np.ndarray:
        return self.reliability >= RELIABILITY_THRESHOLD

    @property
    def passivity_fraction(self) -> float:
        """Share of reliable points with a component of positive imaginary part (non-passive)."""
        comps = self.components[self.reliable]
        if len(comps) == 0:
            return 0.0
        tol = 1e-6 * float(np.abs(comps).max())
        return float(np.mean(np.any(comps.imag > tol, axis=-1)))


def _reliability(fod_local: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    magnitude = np.linalg.norm(fod_local, axis=-1)
    top = magnitude.max()
    overall = magnitude / top if top > 0 else np.zeros_like(magnitude)
    comp = np.abs(fod_local)
    comp_top = comp.max(axis=0)
    per_component = np.divide(comp, comp_top, out=np.zeros_like(comp), where=comp_top > 0)
    return overall, per_component


def solve_stiffness(sys: StiffnessSystem, noise_delta: float, method: str = "tikhonov") -> RecoveredStiffness:
    """Regularized stiffness with the discrepancy principle at `noise_delta` (0: unregularized)."""
    if noise_delta < 0:
        raise InvalidError(f"Noise level must be non-negative, got {noise_delta}")
    solution = regularize(sys.factors, sys.rhs, noise_delta, method)
    if sys.mode == "diagonal":
        values = solution.x.reshape(-1, 3)
        points = sys.colloc.points
        source = sys.fod_at_colloc
    else:
        values = solution.x.reshape(-1, 6)
        points = sys.colloc.mesh.nodes
        source = sys.fod_at_nodes
    reliability, per_component = _reliability(source)
    result = RecoveredStiffness(sys.mode, points, values, reliability, per_component, solution)
    n_reliable = int(result.reliable.sum())
    if n_reliable == 0:
        raise SolverError("No point carries a reliable opening displacement; add incident fields")
    flagged = len(reliability) - n_reliable
    if flagged:
        logger.warning(f"{flagged} of {len(reliability)} points have vanishing FOD and are flagged unreliable")
    logger.info(
        f"Stiffness ({sys.mode}, {solution.method}): residual {solution.residual:.3e}, "
        f"passivity violations {result.passivity_fraction:.1%}"
    )
    return result


def stiffness_rhs(
    system: TractionSystem, fod: FodVector, incident_traction: np.ndarray, delta_trunc: float
) -> Tuple[int, np.ndarray]:
    """``T_N ⟦u⟧ + t^i`` in local components, with ``delta_trunc`` relative to ``‖⟦u⟧‖``."""
    norm = np.linalg.norm(fod.free_vector())
    if norm == 0:
        raise SolverError("Recovered FOD vanishes; the stiffness is not identifiable")
    n, action = truncate_T(system, fod, delta_trunc * norm)
    return n, to_local(system.colloc, action + incident_traction).ravel()
