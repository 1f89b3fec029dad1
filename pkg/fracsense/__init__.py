# Copyright Fracsense Authors 2026
from fracsense_version import __version__

from .exception import Error
from .experiment import PRESETS, ExperimentConfig, get_preset, load_experiment, make_stiffness_pattern
from .fod_inversion import assemble_M, recombine_sources, recover_fod
from .forward import (
    FarFieldDataset,
    ObservationGrid,
    StiffnessField,
    add_noise,
    assemble_T,
    farfield_from_fod,
    scattered_field_at,
    solve_forward,
)
from .glsm import assemble_F, extract_surface, glsm_indicator, glsm_minimizer, indicator_map
from .kernels import ElasticMedium, IncidentPlaneWave, greens_displacement, greens_stress, penny_test_pattern
from .mesh import FodVector, FractureMesh, build_cylindrical_patch, build_penny, interior_collocation
from .pipeline import full_pipeline
from .stiffness_inversion import build_system, solve_stiffness, truncate_T

__all__ = [
    "__version__",
    "ElasticMedium",
    "Error",
    "ExperimentConfig",
    "FarFieldDataset",
    "FodVector",
    "FractureMesh",
    "IncidentPlaneWave",
    "ObservationGrid",
    "PRESETS",
    "StiffnessField",
    "add_noise",
    "assemble_F",
    "assemble_M",
    "assemble_T",
    "build_cylindrical_patch",
    "build_penny",
    "build_system",
    "extract_surface",
    "farfield_from_fod",
    "full_pipeline",
    "get_preset",
    "glsm_indicator",
    "glsm_minimizer",
    "greens_displacement",
    "greens_stress",
    "indicator_map",
    "interior_collocation",
    "load_experiment",
    "make_stiffness_pattern",
    "penny_test_pattern",
    "recombine_sources",
    "recover_fod",
    "scattered_field_at",
    "solve_forward",
    "solve_stiffness",
    "truncate_T",
]
