# Copyright Fracsense Authors 2026
"""End-to-end runs: synthetic data, imaging, FOD recovery and stiffness recovery.

Each stage has a ``run_*`` function working on in-memory objects and a ``*_stage`` function that
exchanges artifacts through an output directory, which is what the staged CLI commands call.
Failures surface as `StageError` tagged with the stage name.
"""
import contextlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from fracsense_utils.hash_utils import digest_files, get_array_sha256_hex
from fracsense_version import __version__

from . import _serialization as io
from .config import logger
from .exception import InvalidError, StageError
from .experiment import ExperimentConfig, make_stiffness_pattern
from .fod_inversion import FodSystem, assemble_M, recombine_sources, recombined_incident_traction, solve_fod
from .fod_inversion import suppressed_energy_fraction
from .forward import (
    FarFieldDataset,
    StiffnessField,
    add_noise,
    assemble_T,
    energy_proxy,
    excitation_waves,
    farfield_from_fod,
    solve_forward_system,
)
from .glsm import FarFieldOperator, GlsmParams, IndicatorMap, assemble_F, extract_surface, hausdorff_distance
from .glsm import indicator_map
from .kernels import IncidentPlaneWave
from .mesh import CollocationSet, FodVector, FractureMesh, interior_collocation
from .regularization import RegularizedSolution
from .stiffness_inversion import RecoveredStiffness, build_system, local_fod, solve_stiffness, stiffness_rhs

STAGES = ("synth", "glsm", "fod", "stiffness")
# reliability floor for the error and correlation metrics
METRIC_RELIABILITY = 0.1

MESH_TRUE = "mesh_true.txt"
FARFIELD = "farfield.txt"
STIFFNESS_TRUTH = "stiffness_truth.txt"
INDICATOR_MAP = "indicator_map.txt"
GAMMA_BREVE = "gamma_breve.txt"
FOD_RECOMBINED = "fod_recombined.txt"
FOD_SINGLE = "fod_single.txt"
RECOMBINATION = "recombination.txt"
STIFFNESS = "stiffness.txt"
REPORT = "report.toml"

PathLike = Union[str, Path]


@contextlib.contextmanager
def stage(name: str):
    """Tag any failure inside the block with the stage name."""
    logger.info(f"[{name}] starting")
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    logger.info(f"[{name}] done")


def _float(x) -> float:
    return float(np.real(x))


@dataclass(frozen=True, eq=False)
class SynthResult:
    mesh: FractureMesh
    colloc: CollocationSet
    truth: StiffnessField
    waves: List[IncidentPlaneWave]
    fods: List[FodVector]
    clean: FarFieldDataset
    data: FarFieldDataset
    residual: float

    def metrics(self, cfg: ExperimentConfig) -> Dict[str, Any]:
        return {
            "forward_residual": self.residual,
            "nodes": self.mesh.n_nodes,
            "elements": self.mesh.n_elements,
            "collocation_points": self.colloc.n_points,
            "records": self.data.n_incident,
            "noise": cfg.noise.level,
            "seed": cfg.noise.seed,
            "mean_radiated_energy": _float(np.mean(energy_proxy(self.clean, cfg.elastic_medium()))),
            # full-precision digest, independent of the text formatting of the artifacts
            "clean_data_sha256": get_array_sha256_hex(self.clean.amplitudes),
        }


def run_synth(cfg: ExperimentConfig) -> SynthResult:
    """Forward solves for every excitation on the grid, then far fields with seeded noise."""
    med, omega = cfg.elastic_medium(), cfg.omega
    grid = cfg.observation_grid()
    mesh = cfg.true_mesh()
    colloc = interior_collocation(mesh, cfg.inversion.collocation)
    truth = make_stiffness_pattern(cfg.stiffness.pattern, cfg.stiffness, mesh, colloc.points)
    system = assemble_T(mesh, colloc, med, omega)
    waves = excitation_waves(grid, omega)
    fods, residual = solve_forward_system(system, truth, waves, med)
    clean = farfield_from_fod(mesh, fods, grid, med, omega)
    clean = FarFieldDataset(grid=grid, omega=omega, amplitudes=clean.amplitudes, incident=tuple(waves))
    data = add_noise(clean, cfg.noise.level, cfg.noise.seed)
    logger.info(f"Synthesized {data.n_incident} records on a {grid.n_theta}x{grid.n_phi} grid")
    return SynthResult(mesh, colloc, truth, waves, fods, clean, data, residual)


@dataclass(frozen=True, eq=False)
class GlsmResult:
    operator: FarFieldOperator
    params: GlsmParams
    imap: IndicatorMap
    gamma_breve: FractureMesh
    hausdorff: Optional[float] = None

    def metrics(self, cfg: ExperimentConfig) -> Dict[str, Any]:
        out = {
            "delta": self.params.delta,
            "alpha": self.params.alpha,
            "sampling_points": len(self.imap.points),
            "spacing": self.imap.spacing,
            "tau": cfg.glsm.tau,
            "selected_points": int(self.gamma_breve.info.get("points", 0)),
            "fit_residual": float(self.gamma_breve.info.get("fit_residual", 0.0)),
            "max_indicator": _float(self.imap.values.max()),
        }
        if self.hausdorff is not None:
            out["hausdorff"] = self.hausdorff
            out["hausdorff_over_wavelength"] = self.hausdorff / cfg.shear_wavelength
        return out


def run_glsm(cfg: ExperimentConfig, data: FarFieldDataset, truth: Optional[FractureMesh] = None) -> GlsmResult:
    """Indicator map over the sampling box and the surface fitted to its bright points."""
    F = assemble_F(data, data.grid).normalized()
    params = GlsmParams.from_noise(cfg.noise.level, points=cfg.sampling_points())
    imap = indicator_map(F, params, cfg.elastic_medium(), spacing=cfg.sampling_spacing)
    gamma = extract_surface(imap, cfg.glsm.tau, cfg.glsm.resolution or None)
    distance = hausdorff_distance(gamma, truth) if truth is not None else None
    if distance is not None:
        logger.info(f"Reconstructed surface within {distance:.3e} of the true fracture")
    return GlsmResult(F, params, imap, gamma, distance)


def select_sources(n_directions: int, count: int) -> np.ndarray:
    """`count` record indices: P waves along evenly spread directions, then S waves if more are needed."""
    if not 2 <= count <= 3 * n_directions:
        raise InvalidError(f"Cannot select {count} sources out of {3 * n_directions} records")
    spread = np.unique(np.round(np.linspace(0, n_directions - 1, min(count, n_directions))).astype(int))
    chosen = list(3 * spread)
    if len(chosen) < count:
        rest = [r for r in range(3 * n_directions) if r % 3 and r // 3 in set(spread)]
        rest += [r for r in range(3 * n_directions) if r not in chosen and r not in rest]
        chosen += rest[: count - len(chosen)]
    return np.array(chosen, dtype=int)


@dataclass(frozen=True, eq=False)
class FodResult:
    system: FodSystem
    sources: np.ndarray
    g: np.ndarray
    fod: FodVector
    solution: RegularizedSolution
    single_fod: FodVector
    single_solution: RegularizedSolution
    # suppressed-subspace energy share of the recombined recovery and of each single-record recovery
    suppressed: float
    single_suppressed: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def metrics(self) -> Dict[str, Any]:
        s = self.system.singular_values
        return {
            "Q": self.system.Q,
            "unknowns": int(self.system.matrix.shape[1]),
            "singular_ratio": _float(s[-1] / s[0]),
            "sources": len(self.sources),
            "alpha": self.solution.parameter,
            "morozov_residual": self.solution.residual,
            "morozov_achievement": self.solution.achievement,
            "suppressed_fraction": self.suppressed,
            "single_suppressed_fraction_min": _float(self.single_suppressed.min()),
            "single_suppressed_fraction_max": _float(self.single_suppressed.max()),
            "fod_sha256": get_array_sha256_hex(self.fod.values),
        }


def run_fod(cfg: ExperimentConfig, data: FarFieldDataset, gamma_breve: FractureMesh) -> FodResult:
    """Recombine incident records against the suppressed modes of ``M̆`` and recover the FOD."""
    system = assemble_M(gamma_breve, data.grid, cfg.elastic_medium(), data.omega, cfg.inversion.q_ratio)
    count = cfg.inversion.sources or system.Q + 1
    sources = select_sources(data.grid.size, max(2, count))
    records = data.records()[sources]
    g, combined = recombine_sources(system, records)
    noise = max(cfg.noise.level, 1e-3)
    fod, solution = solve_fod(system, combined, noise)
    singles = [solve_fod(system, r, noise) for r in records]
    single_suppressed = np.array([suppressed_energy_fraction(system, f) for f, _ in singles])
    suppressed = suppressed_energy_fraction(system, fod)
    logger.info(
        f"Suppressed-mode energy: recombined {suppressed:.3e}, single records "
        f"{single_suppressed.min():.3e}..{single_suppressed.max():.3e}"
    )
    return FodResult(
        system, sources, g, fod, solution, singles[0][0], singles[0][1], suppressed, single_suppressed
    )


@dataclass(frozen=True, eq=False)
class StiffnessResult:
    colloc: CollocationSet
    truncation: int
    recovered: RecoveredStiffness
    truth: Optional[StiffnessField] = None

    def errors(self) -> Dict[str, Any]:
        """Pointwise relative errors of ``Re κ`` and the pattern correlation on reliable points."""
        if self.truth is None:
            return {}
        mask = self.recovered.reliability >= METRIC_RELIABILITY
        if not mask.any():
            return {"reliable_for_metrics": 0}
        rec = self.recovered.components[mask].real
        true = self.truth.components[mask].real
        rel = np.abs(rec - true) / np.abs(true)
        a, b = rec.ravel(), true.ravel()
        correlation = float(np.corrcoef(a, b)[0, 1]) if np.std(a) > 0 and np.std(b) > 0 else float("nan")
        return {
            "reliable_for_metrics": int(mask.sum()),
            "error_kn_max": _float(rel[:, 0].max()),
            "error_kn_median": _float(np.median(rel[:, 0])),
            "error_ks_max": _float(rel[:, 1:].max()),
            "error_ks_median": _float(np.median(rel[:, 1:])),
            "correlation": correlation,
        }

    def metrics(self) -> Dict[str, Any]:
        sol = self.recovered.solution
        out = {
            "mode": self.recovered.mode,
            "method": sol.method,
            "truncation_rank": self.truncation,
            "parameter": sol.parameter,
            "residual": sol.residual,
            "points": len(self.recovered.points),
            "reliable": int(self.recovered.reliable.sum()),
            "passivity_violation_fraction": self.recovered.passivity_fraction,
        }
        out.update(self.errors())
        return out


def run_stiffness(
    cfg: ExperimentConfig,
    gamma_breve: FractureMesh,
    fod: FodVector,
    sources: Sequence[int],
    g: np.ndarray,
    true_mesh: Optional[FractureMesh] = None,
) -> StiffnessResult:
    """Stiffness on ``Γ̆`` from the contact law with a truncated traction operator."""
    med, omega = cfg.elastic_medium(), cfg.omega
    waves = excitation_waves(cfg.observation_grid(), omega)
    colloc = interior_collocation(gamma_breve, cfg.inversion.collocation)
    system = assemble_T(gamma_breve, colloc, med, omega)
    t_inc = recombined_incident_traction([waves[int(s)] for s in sources], g, colloc, med)
    n, rhs = stiffness_rhs(system, fod, t_inc, cfg.inversion.delta_trunc)
    nodes_local = fod.local_components() if cfg.inversion.mode == "full" else None
    stiff_sys = build_system(cfg.inversion.mode, local_fod(colloc, fod), rhs, colloc, fod_at_nodes=nodes_local)
    recovered = solve_stiffness(stiff_sys, cfg.noise.level, cfg.inversion.method)
    truth = None
    if true_mesh is not None:
        truth = make_stiffness_pattern(cfg.stiffness.pattern, cfg.stiffness, true_mesh, recovered.points)
    return StiffnessResult(colloc, n, recovered, truth)


# Artifact plumbing


def _out(out: PathLike) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save_synth(out: Path, result: SynthResult):
    io.write_mesh(out / MESH_TRUE, result.mesh)
    io.write_farfield(out / FARFIELD, result.data)
    io.write_stiffness_truth(out / STIFFNESS_TRUTH, result.truth)


def save_glsm(out: Path, result: GlsmResult):
    io.write_indicator_map(out / INDICATOR_MAP, result.imap)
    io.write_mesh(out / GAMMA_BREVE, result.gamma_breve)


def save_fod(out: Path, result: FodResult):
    io.write_fod(out / FOD_RECOMBINED, result.fod)
    io.write_fod(out / FOD_SINGLE, result.single_fod)
    io.write_recombination(out / RECOMBINATION, result.system.Q, result.sources, result.g)


def _surface(cfg: ExperimentConfig, out: Path) -> FractureMesh:
    if cfg.inversion.geometry_oracle:
        return cfg.true_mesh()
    return io.read_mesh(out / GAMMA_BREVE)


def _digests(out: Path) -> Dict[str, str]:
    return digest_files(p for p in out.iterdir() if p.is_file() and p.name != REPORT)


def _report_header(cfg: ExperimentConfig) -> Dict[str, Any]:
    return {
        "run": {
            "version": __version__,
            "preset": cfg.name,
            "seed": cfg.noise.seed,
            "geometry_oracle": cfg.inversion.geometry_oracle,
            "omega": cfg.omega,
            "shear_wavelength": cfg.shear_wavelength,
        }
    }


def _update_report(cfg: ExperimentConfig, out: Path, section: str, metrics: Dict[str, Any], fresh: bool = False):
    """Merge one stage's metrics into ``report.toml``; `fresh` drops the sections of an earlier run."""
    report = _report_header(cfg)
    if not fresh and (out / REPORT).exists():
        previous = io.read_report(out / REPORT)
        report.update({k: v for k, v in previous.items() if k not in ("run", "artifacts")})
    report[section] = metrics
    report["artifacts"] = _digests(out)
    io.write_report(out / REPORT, report)


def synth_stage(cfg: ExperimentConfig, out: PathLike) -> SynthResult:
    with stage("synth"):
        out = _out(out)
        result = run_synth(cfg)
        save_synth(out, result)
        _update_report(cfg, out, "synth", result.metrics(cfg), fresh=True)
    return result


def glsm_stage(cfg: ExperimentConfig, out: PathLike) -> GlsmResult:
    with stage("glsm"):
        out = _out(out)
        result = run_glsm(cfg, io.read_farfield(out / FARFIELD), cfg.true_mesh())
        save_glsm(out, result)
        _update_report(cfg, out, "glsm", result.metrics(cfg))
    return result


def fod_stage(cfg: ExperimentConfig, out: PathLike) -> FodResult:
    with stage("fod"):
        out = _out(out)
        result = run_fod(cfg, io.read_farfield(out / FARFIELD), _surface(cfg, out))
        save_fod(out, result)
        _update_report(cfg, out, "fod", result.metrics())
    return result


def stiffness_stage(cfg: ExperimentConfig, out: PathLike) -> StiffnessResult:
    with stage("stiffness"):
        out = _out(out)
        gamma = _surface(cfg, out)
        fod = io.read_fod(out / FOD_RECOMBINED, gamma)
        _, sources, g = io.read_recombination(out / RECOMBINATION)
        result = run_stiffness(cfg, gamma, fod, sources, g, cfg.true_mesh())
        io.write_stiffness(out / STIFFNESS, result.recovered)
        _update_report(cfg, out, "stiffness", result.metrics())
    return result


@dataclass(frozen=True, eq=False)
class PipelineResult:
    synth: SynthResult
    glsm: Optional[GlsmResult]
    fod: FodResult
    stiffness: StiffnessResult
    report: Dict[str, Any]


def full_pipeline(cfg: ExperimentConfig, out: Optional[PathLike] = None) -> PipelineResult:
    """All four stages in-process; artifacts and ``report.toml`` go to `out` when given.

    With ``geometry_oracle`` the true fracture stands in for ``Γ̆`` and imaging is skipped.
    """
    with stage("synth"):
        synth = run_synth(cfg)
    glsm = None
    if cfg.inversion.geometry_oracle:
        gamma = synth.mesh
    else:
        with stage("glsm"):
            glsm = run_glsm(cfg, synth.data, synth.mesh)
        gamma = glsm.gamma_breve
    with stage("fod"):
        fod = run_fod(cfg, synth.data, gamma)
    with stage("stiffness"):
        stiffness = run_stiffness(cfg, gamma, fod.fod, fod.sources, fod.g, synth.mesh)

    report = _report_header(cfg)
    report["synth"] = synth.metrics(cfg)
    if glsm is not None:
        report["glsm"] = glsm.metrics(cfg)
    report["fod"] = fod.metrics()
    report["stiffness"] = stiffness.metrics()
    if out is not None:
        path = _out(out)
        save_synth(path, synth)
        if glsm is not None:
            save_glsm(path, glsm)
        save_fod(path, fod)
        io.write_stiffness(path / STIFFNESS, stiffness.recovered)
        report["artifacts"] = _digests(path)
        io.write_report(path / REPORT, report)
    return PipelineResult(synth, glsm, fod, stiffness, report)
