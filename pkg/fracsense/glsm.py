# Copyright Fracsense Authors 2026
"""Fracture imaging with the generalized linear sampling method.

For a sampling point ``z`` and trial normal ``n`` the far field of a vanishing penny crack is
tested against the range of the far-field operator ``F``. The indicator is large where the
test pattern is reachable with a density of small ``F♯``-energy, i.e. on the fracture.
"""
import functools
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.spatial
from scipy.spatial.distance import directed_hausdorff

from fracsense_utils.thread_utils import chunked, ordered_map

from .config import config, logger
from .exception import InvalidError, NotFoundError, RegularizationWarning, SolverError
from .forward import FarFieldDataset, ObservationGrid
from .kernels import ElasticMedium, penny_pattern_intrinsic
from .mesh import FractureMesh

_POINT_CHUNK = 64
FIT_RESIDUAL_TOL = 0.5  # in sampling-grid spacings
_EXTENT_PERCENTILES = (2.0, 98.0)


def _cubic_directions() -> np.ndarray:
    axes = np.eye(3)
    faces = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]
    body = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]
    dirs = np.concatenate([axes, np.array(faces, dtype=float), np.array(body, dtype=float)])
    return dirs / np.linalg.norm(dirs, axis=-1)[:, None]


# 13 directions: coordinate axes, face diagonals and body diagonals of a cube, one per antipodal pair
TRIAL_NORMALS = _cubic_directions()


@dataclass(frozen=True, eq=False)
class HerglotzDensity:
    """Per source direction: ``g_p`` along ``d`` and ``(g_θ, g_φ)`` on ``θ̂(d), φ̂(d)``."""

    grid: ObservationGrid
    coefficients: np.ndarray  # (N_src, 3)

    @classmethod
    def from_vector(cls, grid: ObservationGrid, g) -> "HerglotzDensity":
        return cls(grid, np.asarray(g, dtype=complex).reshape(grid.size, 3))

    def vector(self) -> np.ndarray:
        return self.coefficients.ravel()


def f_sharp(F: np.ndarray) -> np.ndarray:
    """``½|F + F*| + (F - F*)/(2i)``, then clipped to the positive semidefinite cone."""
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise InvalidError(f"F♯ needs a square far-field operator, got shape {F.shape}")
    lam, vec = np.linalg.eigh((F + F.conj().T) / 2)
    out = (vec * np.abs(lam)) @ vec.conj().T + (F - F.conj().T) / 2j
    out = (out + out.conj().T) / 2
    lam, vec = np.linalg.eigh(out)
    if lam.min() < 0:
        out = (vec * np.clip(lam, 0, None)) @ vec.conj().T
    return out


@dataclass(frozen=True, eq=False)
class FarFieldOperator:
    matrix: np.ndarray  # (3 N_obs, 3 N_src)
    obs_grid: ObservationGrid
    source_grid: ObservationGrid
    omega: float

    @functools.cached_property
    def sharp(self) -> np.ndarray:
        return f_sharp(self.matrix)

    @functools.cached_property
    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def normalized(self) -> "FarFieldOperator":
        norm = self.spectral_norm
        if norm == 0:
            raise SolverError("Far-field operator vanishes; the data carries no scattered field")
        return FarFieldOperator(self.matrix / norm, self.obs_grid, self.source_grid, self.omega)

    def apply(self, g: HerglotzDensity) -> np.ndarray:
        return self.matrix @ g.vector()


def assemble_F(dataset: FarFieldDataset, source_grid: ObservationGrid) -> FarFieldOperator:
    """Columns ``3j + p`` hold the record of excitation ``p`` (P, S-θ̂, S-φ̂) along source direction ``j``,
    weighted by that direction's quadrature weight."""
    if dataset.n_incident != 3 * source_grid.size:
        raise InvalidError(
            f"Far-field operator needs {3 * source_grid.size} excitations on the source grid, "
            f"got {dataset.n_incident} records"
        )
    weights = np.repeat(source_grid.weights, 3)
    matrix = dataset.records().T * weights
    return FarFieldOperator(matrix=matrix, obs_grid=dataset.grid, source_grid=source_grid, omega=dataset.omega)


@dataclass(frozen=True, eq=False)
class GlsmParams:
    alpha: float
    delta: float
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    normals: np.ndarray = field(default_factory=lambda: TRIAL_NORMALS)

    def __post_init__(self):
        if not (self.alpha > 0 and self.delta > 0):
            raise InvalidError(f"GLSM needs alpha > 0 and delta > 0, got alpha={self.alpha}, delta={self.delta}")
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)).reshape(-1, 3))
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        object.__setattr__(self, "normals", normals / np.linalg.norm(normals, axis=-1)[:, None])

    @classmethod
    def from_noise(cls, noise: float, points=None, normals=None) -> "GlsmParams":
        """``δ`` is the relative noise level and ``α = δ²``. A floor keeps noise-free data well posed."""
        delta = max(noise, 1e-3)
        return cls(
            alpha=delta**2,
            delta=delta,
            points=np.zeros((0, 3)) if points is None else points,
            normals=TRIAL_NORMALS if normals is None else normals,
        )


class _GlsmSolver:
    """Factorizes ``F*F + αF♯ + αδI`` once; solves for any number of test patterns."""

    def __init__(self, F: FarFieldOperator, params: GlsmParams):
        self.F = F.matrix
        self.sharp = F.sharp
        self.params = params
        n = self.F.shape[1]
        lhs = self.F.conj().T @ self.F + params.alpha * self.sharp + params.alpha * params.delta * np.eye(n)
        try:
            self.factor = scipy.linalg.cho_factor(lhs)
        except np.linalg.LinAlgError as exc:
            cond = np.linalg.cond(lhs)
            raise SolverError("GLSM normal matrix is not positive definite", condition_number=cond) from exc

    def minimize(self, phi: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self.factor, self.F.conj().T @ phi)

    def indicator(self, g: np.ndarray) -> np.ndarray:
        energy = np.einsum("in,ij,jn->n", g.conj(), self.sharp, g).real + self.params.delta * np.sum(np.abs(g) ** 2, 0)
        return 1.0 / np.sqrt(energy)


def penny_far_field(grid: ObservationGrid, z, n, med: ElasticMedium, omega: float) -> np.ndarray:
    """Test pattern at the observation directions as a ``3 N_obs`` (or ``(..., 3 N_obs)``) vector."""
    amplitudes = penny_pattern_intrinsic(grid.directions, z, n, med, omega)
    return amplitudes.reshape(amplitudes.shape[:-2] + (-1,))


def glsm_minimizer(F: FarFieldOperator, phi: np.ndarray, params: GlsmParams) -> HerglotzDensity:
    """Minimizer of ``‖Fg - φ‖² + α(‖F♯^½ g‖² + δ‖g‖²)``."""
    g = _GlsmSolver(F, params).minimize(np.asarray(phi, dtype=complex))
    return HerglotzDensity.from_vector(F.source_grid, g)


def glsm_indicator(F: FarFieldOperator, params: GlsmParams, z, n, med: ElasticMedium) -> float:
    solver = _GlsmSolver(F, params)
    phi = penny_far_field(F.obs_grid, z, np.asarray(n, dtype=float), med, F.omega)
    return float(solver.indicator(solver.minimize(phi)[:, None])[0])


@dataclass(frozen=True, eq=False)
class IndicatorMap:
    points: np.ndarray  # (N, 3)
    values: np.ndarray  # (N,)
    normal_index: np.ndarray  # (N,) index of the maximizing trial normal
    normals: np.ndarray
    spacing: float

    def selection(self, tau: float) -> np.ndarray:
        if not 0 < tau < 1:
            raise InvalidError(f"Threshold fraction must lie in (0, 1), got {tau}")
        return np.flatnonzero(self.values >= tau * self.values.max())


def sampling_grid(lower, upper, spacing: float) -> np.ndarray:
    """Cartesian sampling points covering the box, ``x``-major."""
    if spacing <= 0:
        raise InvalidError(f"Sampling spacing must be positive, got {spacing}")
    axes = [np.arange(lo, hi + 0.5 * spacing, spacing) for lo, hi in zip(lower, upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def indicator_map(
    F: FarFieldOperator,
    params: GlsmParams,
    med: ElasticMedium,
    spacing: float = 0.0,
    threads: Optional[int] = None,
) -> IndicatorMap:
    """Indicator maximized over the trial normals at every sampling point, in parallel over point chunks."""
    threads = config["threads"] if threads is None else threads
    solver = _GlsmSolver(F, params)
    points = params.points
    if len(points) == 0:
        raise InvalidError("GLSM parameters carry no sampling points")

    def evaluate(block: range) -> Tuple[np.ndarray, np.ndarray]:
        z = points[block.start : block.stop]
        best = np.zeros(len(z))
        arg = np.zeros(len(z), dtype=int)
        for k, n in enumerate(params.normals):
            phi = penny_far_field(F.obs_grid, z, n, med, F.omega)
            values = solver.indicator(solver.minimize(phi.T))
            better = values > best
            best[better] = values[better]
            arg[better] = k
        return best, arg

    results = ordered_map(evaluate, chunked(len(points), _POINT_CHUNK), threads)
    values = np.concatenate([r[0] for r in results])
    normal_index = np.concatenate([r[1] for r in results])
    logger.info(f"Indicator map over {len(points)} points, max {values.max():.3e}")
    return IndicatorMap(points, values, normal_index, params.normals, spacing)


def _mls_heights(uv: np.ndarray, h: np.ndarray, targets: np.ndarray, width: float) -> np.ndarray:
    """Moving least squares: locally weighted linear fit of ``h(u, v)`` evaluated at `targets`."""
    out = np.empty(len(targets))
    design = np.column_stack([np.ones(len(uv)), uv])
    for t, target in enumerate(targets):
        d2 = np.sum((uv - target) ** 2, axis=-1)
        w = np.exp(-d2 / width**2)
        if w.sum() < 1e-8 or np.count_nonzero(w > 1e-6) < 3:
            out[t] = h[np.argmin(d2)]
            continue
        A = design * np.sqrt(w)[:, None]
        coef, *_ = np.linalg.lstsq(A, h * np.sqrt(w), rcond=None)
        out[t] = coef[0] + coef[1:] @ target
    return out


def extract_surface(imap: IndicatorMap, tau: float, resolution: Optional[int] = None) -> FractureMesh:
    """Fit a height-field patch to the points where the indicator is at least ``tau`` of its maximum.

    The patch is parametrized over the principal plane of the selected points, spans their
    2nd-98th percentile extents, and is oriented along the trial normal most of them prefer.
    """
    sel = imap.selection(tau)
    if len(sel) < 3:
        raise NotFoundError(f"Indicator threshold {tau} selects {len(sel)} points; at least 3 are needed")
    X = imap.points[sel]
    center = X.mean(axis=0)
    _, _, vh = np.linalg.svd(X - center, full_matrices=False)
    normal = vh[2]
    dominant = imap.normals[np.bincount(imap.normal_index[sel], minlength=len(imap.normals)).argmax()]
    if normal @ dominant < 0:
        normal = -normal
    a1 = vh[0]
    a2 = np.cross(normal, a1)
    uv = np.column_stack([(X - center) @ a1, (X - center) @ a2])
    h = (X - center) @ normal

    spacing = imap.spacing if imap.spacing > 0 else float(np.min(scipy.spatial.cKDTree(X).query(X, k=2)[0][:, 1]))
    lo, hi = np.percentile(uv, _EXTENT_PERCENTILES, axis=0)
    if resolution is None:
        counts = np.maximum(2, np.ceil((hi - lo) / spacing).astype(int))
    else:
        counts = np.array([resolution, resolution])
    u = np.linspace(lo[0], hi[0], counts[0] + 1)
    v = np.linspace(lo[1], hi[1], counts[1] + 1)
    uu, vv = np.meshgrid(u, v, indexing="xy")
    node_uv = np.column_stack([uu.ravel(), vv.ravel()])
    width = 1.5 * spacing
    node_h = _mls_heights(uv, h, node_uv, width)
    nodes = center + node_uv[:, 0:1] * a1 + node_uv[:, 1:2] * a2 + node_h[:, None] * normal

    def idx(i, j):
        return j * (counts[0] + 1) + i

    elements = [
        [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]
        for j in range(counts[1])
        for i in range(counts[0])
    ]
    residual = float(np.sqrt(np.mean((_mls_heights(uv, h, uv, width) - h) ** 2)))
    mesh = FractureMesh.from_arrays(
        nodes, elements, kind="extracted", tau=tau, fit_residual=residual, points=int(len(sel))
    )
    logger.info(f"Extracted surface from {len(sel)} points: {mesh.n_elements} elements, fit residual {residual:.3e}")
    if residual > FIT_RESIDUAL_TOL * spacing:
        msg = f"Surface fit residual {residual:.3e} exceeds {FIT_RESIDUAL_TOL} grid spacings"
        warnings.warn(msg, RegularizationWarning)
        logger.warning(msg)
    return mesh


def surface_samples(mesh: FractureMesh) -> np.ndarray:
    return np.concatenate([mesh.nodes, mesh.quadrature.sample.x])


def hausdorff_distance(a: FractureMesh, b: FractureMesh) -> float:
    """Symmetric Hausdorff distance between node-and-quadrature-point clouds of two meshes."""
    pa, pb = surface_samples(a), surface_samples(b)
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))
