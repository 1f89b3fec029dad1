# Copyright Fracsense Authors 2026
"""Acceptance checks: closed-form oracles for the numerics and property checks on preset runs.

Fast checks run in seconds. Slow checks build full operators or run the ``zebra-mini`` pipeline and
take minutes; their preset runs are shared through a cache.
"""
import functools
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .config import logger
from .exception import Error
from .experiment import ExperimentConfig, get_preset, make_stiffness_pattern
from .fod_inversion import solve_fod, suppressed_energy_fraction
from .forward import (
    ObservationGrid,
    StiffnessField,
    assemble_T,
    contact_matrix,
    farfield_from_fod,
    incident_tractions,
    scattered_field_at,
    solve_forward_system,
    solve_least_squares,
)
from .glsm import GlsmParams, indicator_map
from .kernels import (
    ElasticMedium,
    IncidentPlaneWave,
    farfield_stress_kernel,
    greens_displacement,
    greens_stress,
    kelvin_displacement,
    spherical_basis,
)
from .mesh import FodVector, build_penny, interior_collocation
from .pipeline import PipelineResult, full_pipeline
from .stiffness_inversion import build_system, local_fod, solve_stiffness, stiffness_rhs

VALIDATION_PRESET = "zebra-mini"
_MEDIUM = ElasticMedium.from_wave_speeds(2.08, 1.0)

Outcome = Tuple[bool, str]


class Check(NamedTuple):
    criterion: int
    name: str
    slow: bool
    run: Callable[[], Outcome]


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    status: str  # "pass", "fail" or "skipped"
    detail: str
    seconds: float

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


# 1. Kernel oracles


def check_kernels() -> Outcome:
    rng = np.random.default_rng(0)
    xi = rng.uniform(-1, 1, (20, 3))
    x = rng.uniform(-1, 1, (20, 3)) + np.array([3.0, 0, 0])
    omega = 2.0
    U = greens_displacement(xi, x, _MEDIUM, omega)
    reciprocity = _rel(np.swapaxes(greens_displacement(x, xi, _MEDIUM, omega), -1, -2), U)
    symmetry = _rel(np.swapaxes(U, -1, -2), U)

    # omega scaled per pair so that k_s r = 1e-6
    r = np.linalg.norm(xi - x, axis=-1)
    static = max(
        _rel(greens_displacement(a, b, _MEDIUM, 1e-6 * _MEDIUM.c_s / d), kelvin_displacement(a, b, _MEDIUM))
        for a, b, d in zip(xi, x, r)
    )

    k_p, k_s = _MEDIUM.wavenumbers(omega)
    R = 1e3 * 2 * np.pi / k_s
    e = np.array([0.48, -0.6, 0.64])
    src = np.array([0.1, 0.2, -0.15])
    exact = greens_stress(R * e, src, _MEDIUM, omega)
    P, S = farfield_stress_kernel(e, src, _MEDIUM, omega)
    asymptotic = P * np.exp(1j * k_p * R) / (4 * np.pi * (_MEDIUM.lam + 2 * _MEDIUM.mu) * R) + S * np.exp(
        1j * k_s * R
    ) / (4 * np.pi * _MEDIUM.mu * R)
    far = _rel(asymptotic, exact)
    ok = reciprocity <= 1e-12 and symmetry <= 1e-12 and static <= 1e-4 and far <= 0.01
    return ok, f"reciprocity {reciprocity:.1e}, symmetry {symmetry:.1e}, static {static:.1e}, far field {far:.1e}"


# 2. Traction-free penny against the static opening


def check_penny_opening(rings: int = 16) -> Outcome:
    a, p = 1.0, 1.0
    k_p = 0.01 / a
    omega = k_p * _MEDIUM.c_p
    mesh = build_penny(a, rings)
    colloc = interior_collocation(mesh, 4)
    system = assemble_T(mesh, colloc, _MEDIUM, omega)
    rhs = np.tile(p * np.array([0.0, 0.0, 1.0]), colloc.n_points)

    free = StiffnessField.normal_shear(colloc.points, 0.0, 0.0)
    x, _ = solve_least_squares(contact_matrix(system, free), rhs)
    opening = FodVector.from_free(mesh, x)
    r = np.linalg.norm(mesh.nodes[:, :2], axis=-1)
    inner = r < a * (1 - 1.5 / rings)
    nu = _MEDIUM.poisson_ratio
    exact = 4 * (1 - nu) * p / (np.pi * _MEDIUM.mu) * np.sqrt(a**2 - r[inner] ** 2)
    pointwise = float(np.max(np.abs(opening.values[inner, 2].real - exact) / exact))

    welded = StiffnessField.normal_shear(colloc.points, 1e8, 1e8)
    xw, _ = solve_least_squares(contact_matrix(system, welded), rhs)
    suppression = opening.norm() / max(float(np.linalg.norm(xw)), 1e-300)
    ok = pointwise <= 0.05 and suppression >= 1e4
    return ok, f"max relative opening error {pointwise:.3f} off the edge ring, welded suppression {suppression:.2e}"


# 3. Symmetric antiplane pair


def check_antiplane_pair() -> Outcome:
    mesh = build_penny(0.5, 3)
    colloc = interior_collocation(mesh, 4)
    omega = 3.0
    system = assemble_T(mesh, colloc, _MEDIUM, omega)
    K = StiffnessField.diagonal(colloc.points, 5 - 1j, 4 - 0.8j, 4 - 0.8j)
    angle = np.pi / 5
    d_up = np.array([np.sin(angle), 0.0, np.cos(angle)])
    d_down = np.array([np.sin(angle), 0.0, -np.cos(angle)])
    q = np.array([0.0, 1.0, 0.0])
    waves = [IncidentPlaneWave.s_wave(d_up, q, omega), IncidentPlaneWave.s_wave(d_down, q, omega)]
    fods, _ = solve_forward_system(system, K, waves[:1], _MEDIUM)
    single = fods[0]
    A = contact_matrix(system, K)
    pair = incident_tractions(colloc, waves, _MEDIUM).sum(axis=-1)
    x, _ = solve_least_squares(A, pair)
    ratio = float(np.linalg.norm(x)) / single.norm()
    return ratio <= 1e-6, f"pair/single FOD norm ratio {ratio:.1e}"


# 4. Far field against the rescaled near field


def check_far_field_consistency() -> Outcome:
    mesh = build_penny(0.5, 3)
    omega = 4.0
    k_p, k_s = _MEDIUM.wavenumbers(omega)
    fod = FodVector.from_function(
        mesh, lambda x: np.outer(0.25 - np.sum(x**2, axis=-1), [0.3, -0.2 + 0.1j, 1.0])
    )
    grid = ObservationGrid(3, 4)
    data = farfield_from_fod(mesh, fod, grid, _MEDIUM, omega)
    R = 100 * 2 * np.pi / k_s
    theta_hat, phi_hat = spherical_basis(grid.directions)
    worst = 0.0
    for o, e in enumerate(grid.directions):
        a = data.amplitudes[0, o]
        predicted = a[0] * e * np.exp(1j * k_p * R) / (4 * np.pi * (_MEDIUM.lam + 2 * _MEDIUM.mu) * R) + (
            a[1] * theta_hat[o] + a[2] * phi_hat[o]
        ) * np.exp(1j * k_s * R) / (4 * np.pi * _MEDIUM.mu * R)
        near = scattered_field_at(mesh, fod, R * e, _MEDIUM, omega)
        worst = max(worst, _rel(predicted, near))
    return worst <= 0.01, f"max relative mismatch {worst:.2e} at r = 100 shear wavelengths"


# Preset runs


@functools.lru_cache(maxsize=None)
def preset_run(name: str = VALIDATION_PRESET, oracle: bool = False, seed: int = 0) -> PipelineResult:
    cfg = get_preset(name).with_overrides(seed=seed, geometry_oracle=oracle)
    logger.info(f"Validation run of '{name}' (geometry oracle: {oracle})")
    return full_pipeline(cfg)


def _cfg() -> ExperimentConfig:
    return get_preset(VALIDATION_PRESET)


# 5. Compactness fingerprint


def check_compactness() -> Outcome:
    run = preset_run(oracle=True)
    system = run.fod.system
    decay = system.decay
    # round trip on the true surface: truth minus recovery for the first P-wave record
    true_fod = run.synth.fods[0]
    recovered, _ = solve_fod(system, run.synth.data.records()[0], _cfg().noise.level)
    residual = FodVector(true_fod.mesh, true_fod.values - recovered.values)
    share = suppressed_energy_fraction(system, residual)
    return decay <= 1e-3 and share >= 0.8, f"singular ratio {decay:.1e}, residual share in suppressed modes {share:.2f}"


# 6. Morozov contract


def check_morozov() -> Outcome:
    run = preset_run(oracle=True)
    achievement = run.fod.solution.achievement
    return abs(achievement - 1) <= 0.02, f"achieved/requested discrepancy {achievement:.4f}"


# 7. Recombination benefit


def check_recombination() -> Outcome:
    run = preset_run(oracle=True)
    combined, singles = run.fod.suppressed, run.fod.single_suppressed
    return bool(combined < singles.min()), f"recombined {combined:.2e} vs best single {singles.min():.2e}"


# 8. Imaging contrast


def check_glsm_contrast() -> Outcome:
    cfg = _cfg()
    run = preset_run()
    glsm = run.glsm
    mesh = run.synth.mesh
    sample = mesh.quadrature.sample
    on = sample.x
    off = on + 0.5 * cfg.shear_wavelength * sample.normal
    params = GlsmParams(glsm.params.alpha, glsm.params.delta, np.concatenate([on, off]), glsm.params.normals)
    values = indicator_map(glsm.operator, params, cfg.elastic_medium()).values
    contrast = float(np.median(values[: len(on)]) / np.median(values[len(on) :]))
    distance = glsm.hausdorff / cfg.shear_wavelength
    ok = contrast >= 5 and distance <= 0.25
    return ok, f"median on/off contrast {contrast:.1f}, Hausdorff distance {distance:.3f} shear wavelengths"


# 9. End-to-end stiffness


def check_stiffness_recovery() -> Outcome:
    rec = preset_run().stiffness.errors()
    oracle = preset_run(oracle=True).stiffness.errors()
    if not rec.get("reliable_for_metrics") or not oracle.get("reliable_for_metrics"):
        return False, "no reliable points"
    worst = max(rec["error_kn_max"], rec["error_ks_max"])
    worst_oracle = max(oracle["error_kn_max"], oracle["error_ks_max"])
    ok = worst <= 0.3 and rec["correlation"] >= 0.8 and worst_oracle <= worst
    return ok, (
        f"max relative error {worst:.3f} (oracle geometry {worst_oracle:.3f}), correlation {rec['correlation']:.3f}"
    )


# 10. Exact round trip


def check_exact_round_trip() -> Outcome:
    cfg = _cfg()
    med, omega = cfg.elastic_medium(), cfg.omega
    mesh = cfg.true_mesh()
    colloc = interior_collocation(mesh, cfg.inversion.collocation)
    params = cfg.stiffness
    truth = make_stiffness_pattern("uniform", params, mesh, colloc.points)
    system = assemble_T(mesh, colloc, med, omega)
    wave = IncidentPlaneWave.p_wave(np.array([0.0, 0.6, -0.8]), omega)
    fods, _ = solve_forward_system(system, truth, [wave], med)
    fod = fods[0]
    t_inc = incident_tractions(colloc, [wave], med)[:, 0]
    _, rhs = stiffness_rhs(system, fod, t_inc, cfg.inversion.delta_trunc)
    rec = solve_stiffness(build_system("diagonal", local_fod(colloc, fod), rhs, colloc), 0.0)
    mask = rec.reliable
    err = float(np.max(np.abs(rec.components[mask] - truth.components[mask]) / np.abs(truth.components[mask])))
    return err <= 0.01, f"max relative error {err:.2e} over {int(mask.sum())} reliable points"


# 11. Determinism


def check_determinism() -> Outcome:
    cfg = _cfg().with_overrides(seed=7)
    digests = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as out:
            digests.append(full_pipeline(cfg, out).report["artifacts"])
    same = digests[0] == digests[1]
    return same, f"{len(digests[0])} artifacts {'identical' if same else 'differ'} across runs"


CHECKS: List[Check] = [
    Check(1, "kernel oracles", False, check_kernels),
    Check(2, "traction-free penny", True, check_penny_opening),
    Check(3, "symmetric antiplane pair", False, check_antiplane_pair),
    Check(4, "far-field consistency", False, check_far_field_consistency),
    Check(5, "compactness fingerprint", True, check_compactness),
    Check(6, "Morozov discrepancy", True, check_morozov),
    Check(7, "recombination benefit", True, check_recombination),
    Check(8, "imaging contrast", True, check_glsm_contrast),
    Check(9, "stiffness recovery", True, check_stiffness_recovery),
    Check(10, "exact round trip", True, check_exact_round_trip),
    Check(11, "determinism", True, check_determinism),
]


def run_checks(skip_slow: bool = False, only: Optional[List[int]] = None) -> List[CheckResult]:
    results = []
    for check in CHECKS:
        if only and check.criterion not in only:
            continue
        if skip_slow and check.slow:
            results.append(CheckResult(check.criterion, check.name, "skipped", "slow", 0.0))
            continue
        start = time.monotonic()
        try:
            passed, detail = check.run()
            status = "pass" if passed else "fail"
        except Error as exc:
            status, detail = "fail", f"{type(exc).__name__}: {exc}"
        seconds = time.monotonic() - start
        logger.info(f"Criterion {check.criterion} ({check.name}): {status} in {seconds:.1f}s")
        results.append(CheckResult(check.criterion, check.name, status, detail, seconds))
    return results
