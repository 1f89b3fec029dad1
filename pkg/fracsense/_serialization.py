# Copyright Fracsense Authors 2026
"""Plain-text artifact formats.

Every writer prints floats with 17 significant digits, so a file read back gives the same
numbers and a repeated run gives the same bytes. Lines starting with ``#`` are headers.
"""
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import toml

from .exception import InvalidError, NotFoundError
from .forward import FarFieldDataset, ObservationGrid, StiffnessField
from .glsm import IndicatorMap
from .kernels import IncidentPlaneWave, spherical_basis
from .mesh import FodVector, FractureMesh
from .stiffness_inversion import RecoveredStiffness

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _complex_columns(values: np.ndarray) -> np.ndarray:
    """``(N, k)`` complex to ``(N, 2k)`` real with interleaved real and imaginary parts."""
    values = np.asarray(values, dtype=complex)
    return np.stack([values.real, values.imag], axis=-1).reshape(len(values), -1)


def _from_columns(columns: np.ndarray) -> np.ndarray:
    return columns[:, 0::2] + 1j * columns[:, 1::2]


def _read_lines(path: PathLike) -> Tuple[List[str], List[str]]:
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"Artifact {path} does not exist")
    headers, body = [], []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        (headers if line.startswith("#") else body).append(line)
    return headers, body


def _table(body: List[str], columns: int, path: PathLike) -> np.ndarray:
    if not body:
        return np.zeros((0, columns))
    data = np.array([[float(c) for c in line.split()] for line in body])
    if data.shape[1] != columns:
        raise InvalidError(f"{path}: expected {columns} columns, got {data.shape[1]}")
    return data


def _header_value(headers: List[str], tag: str, path: PathLike) -> List[str]:
    for line in headers:
        parts = line[1:].split()
        if parts and parts[0] == tag:
            return parts[1:]
    raise InvalidError(f"{path}: missing '# {tag}' header")


# Meshes


def write_mesh(path: PathLike, mesh: FractureMesh):
    """``nds N els M``, then ``N`` coordinate lines and ``M`` lines of 3 or 4 node indices."""
    lines = [f"nds {mesh.n_nodes} els {mesh.n_elements}"]
    lines += [_row(x) for x in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in row if i >= 0) for row in mesh.elements]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: PathLike) -> FractureMesh:
    _, body = _read_lines(path)
    header = body[0].split() if body else []
    if len(header) != 4 or header[0] != "nds" or header[2] != "els":
        raise InvalidError(f"{path}: expected a 'nds N els M' header")
    n_nodes, n_elements = int(header[1]), int(header[3])
    if len(body) != 1 + n_nodes + n_elements:
        raise InvalidError(f"{path}: header announces {n_nodes + n_elements} lines, found {len(body) - 1}")
    nodes = _table(body[1 : 1 + n_nodes], 3, path)
    elements = [[int(c) for c in line.split()] for line in body[1 + n_nodes :]]
    return FractureMesh.from_arrays(nodes, elements, kind="file", source=str(path))


# Far-field data


def write_farfield(path: PathLike, data: FarFieldDataset):
    """One record per (incident, direction): ``theta phi`` then real/imag of ``u_p^∞`` and ``u_s^∞``."""
    grid = data.grid
    lines = [f"# grid {grid.n_theta} {grid.n_phi} omega {_fmt(data.omega)} records {data.n_incident}"]
    for j, w in enumerate(data.incident):
        lines.append(f"# incident {j} {_row(w.d)} {_row(w.q_p)} {_row(w.q_s)}")
    lines.append("# theta phi up1 up2 up3 us1 us2 us3 (real imag pairs)")
    angles = np.column_stack([grid.theta, grid.phi])
    for j in range(data.n_incident):
        values = _complex_columns(np.concatenate([data.up[j], data.us[j]], axis=-1))
        lines += [_row(row) for row in np.column_stack([angles, values])]
    Path(path).write_text("\n".join(lines) + "\n")


def read_farfield(path: PathLike) -> FarFieldDataset:
    headers, body = _read_lines(path)
    parts = _header_value(headers, "grid", path)
    grid = ObservationGrid(int(parts[0]), int(parts[1]))
    omega = float(parts[3])
    n_records = int(parts[5])
    incident = []
    for line in headers:
        fields = line[1:].split()
        if fields and fields[0] == "incident":
            v = np.array([float(c) for c in fields[2:]])
            incident.append(IncidentPlaneWave(d=v[0:3], q_p=v[3:6], q_s=v[6:9], omega=omega))
    table = _table(body, 14, path)
    if len(table) != n_records * grid.size:
        raise InvalidError(f"{path}: expected {n_records * grid.size} records, found {len(table)}")
    values = _from_columns(table[:, 2:]).reshape(n_records, grid.size, 6)
    directions = grid.directions
    theta_hat, phi_hat = spherical_basis(directions)
    up, us = values[..., :3], values[..., 3:]
    amplitudes = np.stack(
        [
            np.einsum("roi,oi->ro", up, directions),
            np.einsum("roi,oi->ro", us, theta_hat),
            np.einsum("roi,oi->ro", us, phi_hat),
        ],
        axis=-1,
    )
    return FarFieldDataset(grid=grid, omega=omega, amplitudes=amplitudes, incident=tuple(incident))


# Stiffness fields


def write_stiffness_truth(path: PathLike, field: StiffnessField):
    """``index x y z`` then real/imag of ``(k_n, k_s1, k_s2)``."""
    lines = ["# index x y z k_n k_s1 k_s2 (real imag pairs)"]
    values = _complex_columns(field.components)
    for i, (x, v) in enumerate(zip(field.points, values)):
        lines.append(f"{i} {_row(x)} {_row(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_stiffness_truth(path: PathLike) -> StiffnessField:
    _, body = _read_lines(path)
    table = _table(body, 10, path)
    comps = _from_columns(table[:, 4:])
    return StiffnessField.diagonal(table[:, 1:4], comps[:, 0], comps[:, 1], comps[:, 2])


def write_stiffness(path: PathLike, rec: RecoveredStiffness):
    """Recovered values per point with the reliability weights; full mode lists the six parameters."""
    n_params = rec.values.shape[1]
    names = "k_n k_s1 k_s2" if n_params == 3 else "nn s1s1 s2s2 ns1 ns2 s1s2"
    lines = [
        f"# mode {rec.mode} method {rec.solution.method} parameter {_fmt(rec.solution.parameter)} "
        f"residual {_fmt(rec.solution.residual)}",
        f"# index x y z {names} (real imag pairs) reliability rel_n rel_s1 rel_s2",
    ]
    values = _complex_columns(rec.values)
    for i in range(len(rec.points)):
        lines.append(
            f"{i} {_row(rec.points[i])} {_row(values[i])} {_fmt(rec.reliability[i])} "
            f"{_row(rec.component_reliability[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_stiffness(path: PathLike) -> Dict[str, Any]:
    """Columns of a recovered stiffness file as arrays (points, values, reliability, component_reliability)."""
    headers, body = _read_lines(path)
    mode = _header_value(headers, "mode", path)[0]
    n_params = 3 if mode == "diagonal" else 6
    table = _table(body, 4 + 2 * n_params + 4, path)
    split = 4 + 2 * n_params
    return {
        "mode": mode,
        "points": table[:, 1:4],
        "values": _from_columns(table[:, 4:split]),
        "reliability": table[:, split],
        "component_reliability": table[:, split + 1 :],
    }


# Indicator maps


def write_indicator_map(path: PathLike, imap: IndicatorMap):
    """Plot-ready grid: ``x y z value normal_index``, with the trial normals in the header."""
    lines = [f"# spacing {_fmt(imap.spacing)} normals {len(imap.normals)}"]
    lines += [f"# normal {k} {_row(n)}" for k, n in enumerate(imap.normals)]
    lines.append("# x y z value normal_index")
    for x, v, k in zip(imap.points, imap.values, imap.normal_index):
        lines.append(f"{_row(x)} {_fmt(v)} {int(k)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_indicator_map(path: PathLike) -> IndicatorMap:
    headers, body = _read_lines(path)
    spacing = float(_header_value(headers, "spacing", path)[0])
    normals = [
        [float(c) for c in line[1:].split()[2:]] for line in headers if line[1:].split()[:1] == ["normal"]
    ]
    table = _table(body, 5, path)
    return IndicatorMap(
        points=table[:, :3],
        values=table[:, 3],
        normal_index=table[:, 4].astype(int),
        normals=np.array(normals),
        spacing=spacing,
    )


# FOD


def write_fod(path: PathLike, fod: FodVector):
    """``node u1 u2 u3 un us1 us2`` as real/imag pairs: global then local components."""
    lines = [f"# nodes {fod.mesh.n_nodes}", "# node u1 u2 u3 un us1 us2 (real imag pairs)"]
    values = _complex_columns(np.concatenate([fod.values, fod.local_components()], axis=-1))
    lines += [f"{i} {_row(v)}" for i, v in enumerate(values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_fod(path: PathLike, mesh: FractureMesh) -> FodVector:
    headers, body = _read_lines(path)
    n_nodes = int(_header_value(headers, "nodes", path)[0])
    if n_nodes != mesh.n_nodes:
        raise InvalidError(f"{path}: FOD has {n_nodes} nodes, mesh has {mesh.n_nodes}")
    table = _table(body, 13, path)
    return FodVector(mesh, _from_columns(table[:, 1:7]))


# Source recombination


def write_recombination(path: PathLike, q: int, sources: np.ndarray, g: np.ndarray):
    """Weights ``g`` per selected record, with the record index into the excitation list."""
    lines = [f"# Q {q} P {len(g)}", "# index record Re(g) Im(g)"]
    lines += [f"{i} {int(s)} {_fmt(w.real)} {_fmt(w.imag)}" for i, (s, w) in enumerate(zip(sources, g))]
    Path(path).write_text("\n".join(lines) + "\n")


def read_recombination(path: PathLike) -> Tuple[int, np.ndarray, np.ndarray]:
    headers, body = _read_lines(path)
    q = int(_header_value(headers, "Q", path)[0])
    table = _table(body, 4, path)
    return q, table[:, 1].astype(int), table[:, 2] + 1j * table[:, 3]


# Reports


def write_report(path: PathLike, report: Dict[str, Any]):
    Path(path).write_text(toml.dumps(report))


def read_report(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"Report {path} does not exist")
    return toml.loads(path.read_text())
