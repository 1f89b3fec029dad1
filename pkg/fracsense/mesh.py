# Copyright Fracsense Authors 2026
"""Boundary-element discretization of fracture surfaces.

Elements are bilinear quadrilaterals on the reference square ``[-1, 1]²`` with corner order
``(-1,-1), (1,-1), (1,1), (-1,1)``, or linear triangles on ``{s, t >= 0, s + t <= 1}``.
`elements` is an ``(N_el, 4)`` index array; triangles are padded with ``-1``.

Built-in surfaces carry an exact `chart`: each element then stores the chart parameters of its
corners, the parameters are interpolated bilinearly and the chart maps them onto the exact
surface. Meshes read from files or fitted to point clouds have bilinear geometry.

Local frames: ``n = x_s × x_t / |x_s × x_t|``, ``e1`` the normalized ``s`` (chart ``u``) tangent,
``e2 = n × e1``, so ``(n, e1, e2)`` is right-handed.
"""
import functools
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np

from .config import config, logger
from .exception import DomainError, InvalidError

QUAD_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
# third corner repeated so every cell has four corners
TRI_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
QUAD_CENTROID = np.array([0.0, 0.0])
TRI_CENTROID = np.array([1.0 / 3.0, 1.0 / 3.0])

_QUAD_SIGNS = QUAD_CORNERS


def gauss_legendre_unit(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


@functools.lru_cache(maxsize=None)
def reference_rule(tri: bool, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the reference square, or its collapsed version on the reference triangle."""
    if tri:
        u, wu = gauss_legendre_unit(order)
        uu, vv = np.meshgrid(u, u, indexing="ij")
        ww = np.outer(wu, wu) * (1 - uu)
        pts = np.stack([uu.ravel(), (vv * (1 - uu)).ravel()], axis=-1)
        return pts, ww.ravel()
    x, w = np.polynomial.legendre.leggauss(order)
    ss, tt = np.meshgrid(x, x, indexing="ij")
    return np.stack([ss.ravel(), tt.ravel()], axis=-1), np.outer(w, w).ravel()


def shape_functions(st: np.ndarray, tri: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Values ``(K, 4)`` and reference derivatives ``(K, 4, 2)``; the padded triangle slot is zero."""
    st = np.atleast_2d(np.asarray(st, dtype=float))
    s, t = st[:, 0:1], st[:, 1:2]
    sa, ta = _QUAD_SIGNS[:, 0], _QUAD_SIGNS[:, 1]
    n_quad = 0.25 * (1 + s * sa) * (1 + t * ta)
    dn_quad = np.stack([0.25 * sa * (1 + t * ta), 0.25 * ta * (1 + s * sa)], axis=-1)
    zero = np.zeros_like(s)
    n_tri = np.concatenate([1 - s - t, s, t, zero], axis=1)
    dn_tri = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), dn_quad.shape)
    tri = np.asarray(tri, dtype=bool).reshape(-1, 1)
    return np.where(tri, n_tri, n_quad), np.where(tri[:, :, None], dn_tri, dn_quad)


class Chart:
    """Exact parametrization of a surface: ``p (K, 2) -> x (K, 3)`` with Jacobian ``(K, 3, 2)``."""

    def map(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def inverse(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class CylinderChart(Chart):
    """``(u, v) -> (R sin(u/R), v, R cos(u/R))``: axis along ``y``, normal pointing away from the axis."""

    def __init__(self, radius: float):
        self.radius = radius

    def map(self, p):
        p = np.asarray(p, dtype=float)
        theta = p[:, 0] / self.radius
        x = np.stack([self.radius * np.sin(theta), p[:, 1], self.radius * np.cos(theta)], axis=-1)
        jac = np.zeros(p.shape[:1] + (3, 2))
        jac[:, 0, 0] = np.cos(theta)
        jac[:, 2, 0] = -np.sin(theta)
        jac[:, 1, 1] = 1.0
        return x, jac

    def inverse(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([self.radius * np.arctan2(x[:, 0], x[:, 2]), x[:, 1]], axis=-1)


class DiscChart(Chart):
    """Polar parameters ``(r, θ) -> c + r cos θ a1 + r sin θ a2`` with normal ``a1 × a2``."""

    def __init__(self, center, a1, a2):
        self.center = np.asarray(center, dtype=float)
        self.a1 = np.asarray(a1, dtype=float)
        self.a2 = np.asarray(a2, dtype=float)

    def map(self, p):
        p = np.asarray(p, dtype=float)
        r, theta = p[:, 0:1], p[:, 1:2]
        radial = np.cos(theta) * self.a1 + np.sin(theta) * self.a2
        x = self.center + r * radial
        d_theta = r * (-np.sin(theta) * self.a1 + np.cos(theta) * self.a2)
        return x, np.stack([radial, d_theta], axis=-1)

    def inverse(self, x):
        d = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        c1, c2 = d @ self.a1, d @ self.a2
        return np.stack([np.hypot(c1, c2), np.mod(np.arctan2(c2, c1), 2 * np.pi)], axis=-1)


class SurfaceSample(NamedTuple):
    """Geometry and shape functions at ``K`` points given by element index and reference coordinates."""

    elements: np.ndarray  # (K,)
    st: np.ndarray  # (K, 2)
    x: np.ndarray  # (K, 3)
    normal: np.ndarray  # (K, 3)
    e1: np.ndarray  # (K, 3)
    e2: np.ndarray  # (K, 3)
    jac: np.ndarray  # (K,) area element
    tangents: np.ndarray  # (K, 3, 2) ∂x/∂(s, t)
    shape: np.ndarray  # (K, 4)
    grad_shape: np.ndarray  # (K, 4, 3) surface gradients
    nodes: np.ndarray  # (K, 4), padded slots point at node 0 with zero shape value

    @property
    def frames(self) -> np.ndarray:
        """Rows ``(n, e1, e2)``: ``frames @ v`` gives local components of a global vector."""
        return np.stack([self.normal, self.e1, self.e2], axis=1)


class QuadraturePoints(NamedTuple):
    sample: SurfaceSample
    weights: np.ndarray  # (K,) reference weight times area element


@dataclass(frozen=True, eq=False)
class FractureMesh:
    nodes: np.ndarray
    elements: np.ndarray
    params: Optional[np.ndarray] = None
    chart: Optional[Chart] = None
    info: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise InvalidError(f"Nodes must have shape (N, 3), got {nodes.shape}")
        elements = _pad_elements(self.elements)
        if elements.size and (elements.max() >= len(nodes) or elements[elements != -1].min() < 0):
            raise InvalidError("Element references a node index out of range")
        for row in elements:
            if len(set(row[row >= 0])) < 3:
                raise InvalidError(f"Element {row.tolist()} has fewer than three distinct nodes")
        if (self.params is None) != (self.chart is None):
            raise InvalidError("Chart parameters and chart must be given together")
        nodes.setflags(write=False)
        elements.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        if self.params is not None:
            params = np.array(self.params, dtype=float)
            if params.shape != elements.shape + (2,):
                raise InvalidError(f"Chart parameters must have shape {elements.shape + (2,)}, got {params.shape}")
            params.setflags(write=False)
            object.__setattr__(self, "params", params)

    @classmethod
    def from_arrays(cls, nodes, elements, **info) -> "FractureMesh":
        return cls(nodes=nodes, elements=elements, info=dict(info))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @functools.cached_property
    def is_tri(self) -> np.ndarray:
        return self.elements[:, 3] < 0

    @functools.cached_property
    def edge_nodes(self) -> np.ndarray:
        """Nodes on element edges that belong to a single element."""
        counts: Dict[Tuple[int, int], int] = {}
        for row in self.elements:
            corners = [int(c) for c in row if c >= 0]
            for a, b in zip(corners, corners[1:] + corners[:1]):
                if a != b:
                    key = (min(a, b), max(a, b))
                    counts[key] = counts.get(key, 0) + 1
        edge = {n for key, c in counts.items() if c == 1 for n in key}
        return np.array(sorted(edge), dtype=int)

    @functools.cached_property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.edge_nodes] = False
        return np.flatnonzero(mask)

    @functools.cached_property
    def free_dofs(self) -> np.ndarray:
        """Indices into a node-major ``3 N_nds`` vector of the unpinned components."""
        return (3 * self.free_nodes[:, None] + np.arange(3)).ravel()

    def sample(self, elements, st) -> SurfaceSample:
        elements = np.atleast_1d(np.asarray(elements, dtype=int))
        st = np.atleast_2d(np.asarray(st, dtype=float))
        if len(elements) == 1 and len(st) > 1:
            elements = np.repeat(elements, len(st))
        tri = self.is_tri[elements]
        shape, dshape = shape_functions(st, tri)
        conn = self.elements[elements]
        nodes = np.where(conn < 0, 0, conn)
        if self.chart is None:
            corners = self.nodes[nodes]
            x = np.einsum("ka,kac->kc", shape, corners)
            tangents = np.einsum("kae,kac->kce", dshape, corners)
        else:
            corners = self.params[elements]
            p = np.einsum("ka,kad->kd", shape, corners)
            dp = np.einsum("kae,kad->kde", dshape, corners)
            x, dx = self.chart.map(p)
            tangents = np.einsum("kcd,kde->kce", dx, dp)
        cross = np.cross(tangents[:, :, 0], tangents[:, :, 1])
        jac = np.linalg.norm(cross, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            normal = cross / jac[:, None]
            e1 = tangents[:, :, 0] / np.linalg.norm(tangents[:, :, 0], axis=-1)[:, None]
        e2 = np.cross(normal, e1)
        grad_shape = np.einsum("kce,kef,kaf->kac", tangents, _inverse_metric(tangents), dshape)
        return SurfaceSample(
            elements=elements,
            st=st,
            x=x,
            normal=normal,
            e1=e1,
            e2=e2,
            jac=jac,
            tangents=tangents,
            shape=shape,
            grad_shape=grad_shape,
            nodes=nodes,
        )

    def quadrature_rule(self, order: int) -> QuadraturePoints:
        samples = []
        for tri in (False, True):
            elems = np.flatnonzero(self.is_tri == tri)
            if len(elems) == 0:
                continue
            pts, w = reference_rule(tri, order)
            samples.append((np.repeat(elems, len(pts)), np.tile(pts, (len(elems), 1)), np.tile(w, len(elems))))
        elems = np.concatenate([s[0] for s in samples])
        order_idx = np.argsort(elems, kind="stable")
        elems = elems[order_idx]
        st = np.concatenate([s[1] for s in samples])[order_idx]
        w = np.concatenate([s[2] for s in samples])[order_idx]
        sample = self.sample(elems, st)
        return QuadraturePoints(sample, w * sample.jac)

    @functools.cached_property
    def quadrature(self) -> QuadraturePoints:
        return self.quadrature_rule(config["quadrature_order"])

    @property
    def area(self) -> float:
        return float(self.quadrature.weights.sum())

    @functools.cached_property
    def element_centers(self) -> np.ndarray:
        st = np.where(self.is_tri[:, None], TRI_CENTROID, QUAD_CENTROID)
        return self.sample(np.arange(self.n_elements), st).x

    @functools.cached_property
    def element_diameters(self) -> np.ndarray:
        conn = np.where(self.elements < 0, self.elements[:, :1], self.elements)
        corners = self.nodes[conn]
        return np.linalg.norm(corners[:, :, None, :] - corners[:, None, :, :], axis=-1).max(axis=(1, 2))

    @functools.cached_property
    def diameter(self) -> float:
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @functools.cached_property
    def node_frames(self) -> np.ndarray:
        """Per-node rows ``(n, e1, e2)``, averaged over the elements sharing the node."""
        n_sum = np.zeros((self.n_nodes, 3))
        t_sum = np.zeros((self.n_nodes, 3))
        for tri, corners, centroid in ((False, QUAD_CORNERS, QUAD_CENTROID), (True, TRI_CORNERS[:3], TRI_CENTROID)):
            elems = np.flatnonzero(self.is_tri == tri)
            if len(elems) == 0:
                continue
            # pull corners slightly inside so degenerate corners still have a tangent plane
            st = centroid + (1 - 1e-6) * (corners - centroid)
            sample = self.sample(np.repeat(elems, len(st)), np.tile(st, (len(elems), 1)))
            slots = np.tile(np.arange(len(st)), len(elems))
            node_ids = self.elements[sample.elements, slots]
            np.add.at(n_sum, node_ids, sample.normal)
            np.add.at(t_sum, node_ids, sample.e1)
        normal = n_sum / np.linalg.norm(n_sum, axis=-1)[:, None]
        e1 = t_sum - np.einsum("ni,ni->n", t_sum, normal)[:, None] * normal
        degenerate = np.linalg.norm(e1, axis=-1) < 1e-8
        if degenerate.any():
            helper = np.where(np.abs(normal[:, :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
            fallback = helper - np.einsum("ni,ni->n", helper, normal)[:, None] * normal
            e1[degenerate] = fallback[degenerate]
        e1 /= np.linalg.norm(e1, axis=-1)[:, None]
        return np.stack([normal, e1, np.cross(normal, e1)], axis=1)

    def pattern_coordinates(self, points) -> np.ndarray:
        """Coordinates in ``[0, 1]²`` spanning the mesh's parameter box, for points on or near the surface."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.chart is not None:
            p = self.chart.inverse(points)
            lo = self.params.reshape(-1, 2).min(axis=0)
            hi = self.params.reshape(-1, 2).max(axis=0)
        else:
            center = self.nodes.mean(axis=0)
            _, _, vh = np.linalg.svd(self.nodes - center, full_matrices=False)
            p = (points - center) @ vh[:2].T
            proj = (self.nodes - center) @ vh[:2].T
            lo, hi = proj.min(axis=0), proj.max(axis=0)
        return (p - lo) / np.where(hi > lo, hi - lo, 1.0)

    def locate(self, elem: int, st) -> SurfaceSample:
        """Sample a single point, checking it lies on the mesh."""
        if not 0 <= elem < self.n_elements:
            raise DomainError(f"Element {elem} is outside the mesh ({self.n_elements} elements)")
        s, t = np.asarray(st, dtype=float)
        tol = 1e-12
        if self.is_tri[elem]:
            inside = s >= -tol and t >= -tol and s + t <= 1 + tol
        else:
            inside = abs(s) <= 1 + tol and abs(t) <= 1 + tol
        if not inside:
            raise DomainError(f"Reference point {(s, t)} lies outside element {elem}")
        return self.sample([elem], [[s, t]])


def _inverse_metric(tangents: np.ndarray) -> np.ndarray:
    # collapsed corners have a singular metric and get non-finite entries instead of an exception
    g = np.einsum("kci,kcj->kij", tangents, tangents)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    adj = np.stack([np.stack([g[:, 1, 1], -g[:, 0, 1]], -1), np.stack([-g[:, 1, 0], g[:, 0, 0]], -1)], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return adj / det[:, None, None]


def _pad_elements(elements) -> np.ndarray:
    rows = [list(map(int, e)) for e in elements]
    for row in rows:
        if len(row) not in (3, 4):
            raise InvalidError(f"Elements must have 3 or 4 nodes, got {row}")
    out = -np.ones((len(rows), 4), dtype=int)
    for i, row in enumerate(rows):
        out[i, : len(row)] = row
    return out


def build_cylindrical_patch(width: float, arclength: float, radius: float, n_u: int, n_v: int) -> FractureMesh:
    """Patch ``{(R sin θ, v, R cos θ): |θ| <= ℓ/(2R), |v| <= L/2}`` with ``n_u`` arc and ``n_v`` width divisions.

    The normal points away from the cylinder axis (the ``y`` axis); ``e1`` runs along the arc and ``e2 = +y``.
    """
    if not (width > 0 and arclength > 0 and radius > 0):
        raise InvalidError(f"Patch dimensions must be positive, got L={width}, ell={arclength}, R={radius}")
    if arclength >= 2 * np.pi * radius:
        raise InvalidError(f"Arclength {arclength} must be shorter than the circumference {2 * np.pi * radius}")
    if n_u < 2 or n_v < 2:
        raise InvalidError(f"Subdivision counts must be at least 2, got n_u={n_u}, n_v={n_v}")
    u = np.linspace(-arclength / 2, arclength / 2, n_u + 1)
    v = np.linspace(-width / 2, width / 2, n_v + 1)
    uu, vv = np.meshgrid(u, v, indexing="xy")
    node_params = np.stack([uu.ravel(), vv.ravel()], axis=-1)
    chart = CylinderChart(radius)
    nodes, _ = chart.map(node_params)

    def idx(i, j):
        return j * (n_u + 1) + i

    elements = [[idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)] for j in range(n_v) for i in range(n_u)]
    params = node_params[np.array(elements)]
    logger.debug(f"Cylindrical patch: {len(nodes)} nodes, {len(elements)} elements")
    return FractureMesh(
        nodes=nodes,
        elements=elements,
        params=params,
        chart=chart,
        info={"kind": "cylinder", "width": width, "arclength": arclength, "radius": radius},
    )


def build_penny(radius: float, rings: int, sectors: Optional[int] = None, center=(0.0, 0.0, 0.0), normal=(0, 0, 1.0)):
    """Flat disc of concentric rings. The first ring is made of quadrilaterals collapsed onto the centre node."""
    if not radius > 0:
        raise InvalidError(f"Radius must be positive, got {radius}")
    if rings < 2:
        raise InvalidError(f"A penny needs at least 2 rings, got {rings}")
    sectors = sectors or max(8, 2 * rings)
    normal = np.asarray(normal, dtype=float)
    normal /= np.linalg.norm(normal)
    helper = np.array([1.0, 0, 0]) if abs(normal[0]) < 0.9 else np.array([0, 1.0, 0])
    a1 = helper - (helper @ normal) * normal
    a1 /= np.linalg.norm(a1)
    chart = DiscChart(center, a1, np.cross(normal, a1))

    r = np.linspace(0.0, radius, rings + 1)
    theta = np.linspace(0.0, 2 * np.pi, sectors + 1)
    node_params = [(0.0, 0.0)] + [(r[k], theta[j]) for k in range(1, rings + 1) for j in range(sectors)]
    nodes, _ = chart.map(np.array(node_params))

    def idx(k, j):
        return 0 if k == 0 else 1 + (k - 1) * sectors + j % sectors

    elements, params = [], []
    for k in range(1, rings + 1):
        for j in range(sectors):
            elements.append([idx(k - 1, j), idx(k, j), idx(k, j + 1), idx(k - 1, j + 1)])
            params.append([(r[k - 1], theta[j]), (r[k], theta[j]), (r[k], theta[j + 1]), (r[k - 1], theta[j + 1])])
    return FractureMesh(
        nodes=nodes,
        elements=elements,
        params=np.array(params),
        chart=chart,
        info={"kind": "penny", "radius": radius, "rings": rings, "sectors": sectors},
    )


# Reference-coordinate layouts of interior collocation points per element
_QUAD_LAYOUTS = {
    1: [(0.0, 0.0)],
    3: [(-0.5, -0.5), (0.5, -0.5), (0.0, 0.5)],
    4: [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)],
}
_TRI_TOWARDS_CORNERS = [tuple(TRI_CENTROID + 0.35 * (c - TRI_CENTROID)) for c in TRI_CORNERS[:3]]
_TRI_LAYOUTS = {
    1: [tuple(TRI_CENTROID)],
    3: _TRI_TOWARDS_CORNERS,
    4: [tuple(TRI_CENTROID)] + _TRI_TOWARDS_CORNERS,
}
COLLOCATION_LAYOUTS = (1, 3, 4)


@dataclass(frozen=True, eq=False)
class CollocationSet:
    """Collocation points strictly inside their host elements, ``m`` per element in element order."""

    mesh: FractureMesh
    m: int
    sample: SurfaceSample

    @property
    def n_points(self) -> int:
        return len(self.sample.elements)

    @property
    def points(self) -> np.ndarray:
        return self.sample.x

    @property
    def hosts(self) -> np.ndarray:
        return self.sample.elements

    @property
    def frames(self) -> np.ndarray:
        return self.sample.frames

    def interpolation_matrix(self) -> np.ndarray:
        """``(N_col, N_nds)`` shape-function values: nodal field -> collocation values."""
        out = np.zeros((self.n_points, self.mesh.n_nodes))
        np.add.at(out, (np.repeat(np.arange(self.n_points), 4), self.sample.nodes.ravel()), self.sample.shape.ravel())
        return out


def interior_collocation(mesh: FractureMesh, m: int) -> CollocationSet:
    if m not in COLLOCATION_LAYOUTS:
        raise InvalidError(f"Unsupported collocation layout m={m}. Must be one of {list(COLLOCATION_LAYOUTS)}")
    st = np.concatenate(
        [np.array(_TRI_LAYOUTS[m] if tri else _QUAD_LAYOUTS[m]) for tri in mesh.is_tri], axis=0
    ).reshape(-1, 2)
    elements = np.repeat(np.arange(mesh.n_elements), m)
    return CollocationSet(mesh=mesh, m=m, sample=mesh.sample(elements, st))


@dataclass(frozen=True, eq=False)
class FodVector:
    """Nodal fracture opening displacement in the global frame, zero on the fracture edge."""

    mesh: FractureMesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.mesh.n_nodes, 3):
            raise InvalidError(f"FOD values must have shape ({self.mesh.n_nodes}, 3), got {values.shape}")
        if np.any(values[self.mesh.edge_nodes] != 0):
            raise InvalidError("FOD must vanish on the edge nodes of the fracture")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: FractureMesh) -> "FodVector":
        return cls(mesh, np.zeros((mesh.n_nodes, 3), dtype=complex))

    @classmethod
    def from_free(cls, mesh: FractureMesh, free_values) -> "FodVector":
        full = np.zeros(3 * mesh.n_nodes, dtype=complex)
        full[mesh.free_dofs] = np.asarray(free_values).ravel()
        return cls(mesh, full.reshape(-1, 3))

    @classmethod
    def from_function(cls, mesh: FractureMesh, fn) -> "FodVector":
        """Sample ``fn(points (N, 3)) -> (N, 3)`` at the free nodes."""
        values = np.zeros((mesh.n_nodes, 3), dtype=complex)
        values[mesh.free_nodes] = fn(mesh.nodes[mesh.free_nodes])
        return cls(mesh, values)

    def free_vector(self) -> np.ndarray:
        return self.values.ravel()[self.mesh.free_dofs]

    def at(self, sample: SurfaceSample) -> np.ndarray:
        return np.einsum("ka,kac->kc", sample.shape, self.values[sample.nodes])

    def local_components(self) -> np.ndarray:
        """Nodal components along ``(n, e1, e2)``."""
        return np.einsum("nij,nj->ni", self.mesh.node_frames, self.values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def tangential_diff(mesh: FractureMesh, f: FodVector, elem: int, st) -> np.ndarray:
    """``D[k, l, m] = n_k ∂_l f_m - n_l ∂_k f_m`` with surface derivatives of the interpolated field."""
    sample = mesh.locate(elem, st)
    grad = np.einsum("al,am->lm", sample.grad_shape[0], f.values[sample.nodes[0]])
    n = sample.normal[0]
    return np.einsum("k,lm->klm", n, grad) - np.einsum("l,km->klm", n, grad)


class _Cells(NamedTuple):
    elements: np.ndarray  # (C,)
    origin: np.ndarray  # (C, 2)
    A: np.ndarray  # (C, 2, 2)


def _children(cells: _Cells, tri: np.ndarray) -> _Cells:
    if len(cells.elements) == 0:
        return cells
    out = []
    quad = ~tri
    if quad.any():
        e, o, A = cells.elements[quad], cells.origin[quad], cells.A[quad]
        for off in 0.5 * QUAD_CORNERS:
            out.append((e, o + A @ off, A / 2))
    if tri.any():
        e, o, A = cells.elements[tri], cells.origin[tri], cells.A[tri]
        for off in ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5)):
            out.append((e, o + A @ np.array(off), A / 2))
        out.append((e, o + A @ np.array([0.5, 0.5]), -A / 2))
    return _Cells(
        np.concatenate([c[0] for c in out]), np.concatenate([c[1] for c in out]), np.concatenate([c[2] for c in out])
    )


def adaptive_quadrature(
    mesh: FractureMesh, xi, elements, ratio: float, max_depth: int, order: int
) -> Tuple[QuadraturePoints, bool]:
    """Quadrature over `elements` with cells subdivided while ``|xi - center| < ratio * diameter``.

    Returns the quadrature points and whether some cell still met the refinement criterion at
    `max_depth` (the evaluation point is then closer to the surface than the finest cell).
    """
    xi = np.asarray(xi, dtype=float)
    elements = np.asarray(elements, dtype=int)
    n = len(elements)
    cells = _Cells(elements, np.zeros((n, 2)), np.broadcast_to(np.eye(2), (n, 2, 2)).copy())
    leaves = []
    unresolved = False
    for depth in range(max_depth + 1):
        if len(cells.elements) == 0:
            break
        tri = mesh.is_tri[cells.elements]
        corners = np.where(tri[:, None, None], TRI_CORNERS, QUAD_CORNERS)
        corner_st = cells.origin[:, None, :] + np.einsum("cij,ckj->cki", cells.A, corners)
        corner_x = mesh.sample(np.repeat(cells.elements, 4), corner_st.reshape(-1, 2)).x.reshape(-1, 4, 3)
        diam = np.linalg.norm(corner_x[:, :, None, :] - corner_x[:, None, :, :], axis=-1).max(axis=(1, 2))
        centroid = np.where(tri[:, None], TRI_CENTROID, QUAD_CENTROID)
        center_x = mesh.sample(cells.elements, cells.origin + np.einsum("cij,cj->ci", cells.A, centroid)).x
        split = np.linalg.norm(center_x - xi, axis=-1) < ratio * diam
        if depth == max_depth:
            unresolved = bool(split.any())
            split[:] = False
        leaves.append(_Cells(cells.elements[~split], cells.origin[~split], cells.A[~split]))
        if not split.any():
            break
        cells = _children(_Cells(cells.elements[split], cells.origin[split], cells.A[split]), tri[split])

    leaf = _Cells(*(np.concatenate([getattr(c, f) for c in leaves]) for f in _Cells._fields))
    elems, st, w = [], [], []
    tri = mesh.is_tri[leaf.elements]
    for is_tri in (False, True):
        mask = tri == is_tri
        if not mask.any():
            continue
        pts, wts = reference_rule(is_tri, order)
        o, A = leaf.origin[mask], leaf.A[mask]
        elems.append(np.repeat(leaf.elements[mask], len(pts)))
        st.append((o[:, None, :] + np.einsum("cij,kj->cki", A, pts)).reshape(-1, 2))
        w.append((np.abs(np.linalg.det(A))[:, None] * wts).ravel())
    sample = mesh.sample(np.concatenate(elems), np.concatenate(st))
    return QuadraturePoints(sample, np.concatenate(w) * sample.jac), unresolved
