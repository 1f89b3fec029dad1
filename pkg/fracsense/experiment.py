# Copyright Fracsense Authors 2026
"""Experiment configs: everything that defines a synthetic fracture-sensing run.

A config is a set of frozen sections that mirror the TOML layout::

    preset = "zebra-mini"        # optional: start from a named preset

    [noise]
    level = 0.05
    seed = 7

    [stiffness]
    pattern = "cheetah"
    k_n = [[5.0, -1.0], [20.0, -4.0]]   # complex levels as [real, imag] pairs

Keys missing from the file keep the value of the preset (or the built-in default).
"""
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import toml

from .exception import ConfigError, InvalidError
from .forward import ObservationGrid, StiffnessField
from .glsm import sampling_grid
from .kernels import ElasticMedium
from .mesh import FractureMesh, build_cylindrical_patch, build_penny
from .regularization import REGULARIZERS
from .stiffness_inversion import MODES

GEOMETRY_KINDS = ("cylinder", "penny")
PATTERNS = ("uniform", "zebra", "cheetah")

Levels = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class MediumConfig:
    c_p: float = 2.08
    c_s: float = 1.0
    rho: float = 1.0


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = "cylinder"
    width: float = 0.7
    arclength: float = 0.55
    radius: float = 0.35
    n_u: int = 8
    n_v: int = 10
    rings: int = 6


@dataclass(frozen=True)
class FrequencyConfig:
    # shear wavelength over the fracture length (arclength, or diameter for a penny)
    wavelength_ratio: float = 0.7
    # takes precedence over the ratio when positive
    k_s: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    n_theta: int = 12
    n_phi: int = 8


@dataclass(frozen=True)
class StiffnessConfig:
    pattern: str = "zebra"
    k_n: Levels = ((5.0, -1.0), (20.0, -4.0))
    k_s: Levels = ((4.0, -0.8), (15.0, -3.0))
    stripes: int = 4
    spots: int = 6
    spot_radius: float = 0.15
    spot_seed: int = 3


@dataclass(frozen=True)
class NoiseConfig:
    level: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class GlsmConfig:
    lower: Tuple[float, ...] = (-0.4, -0.5, 0.05)
    upper: Tuple[float, ...] = (0.4, 0.5, 0.55)
    points_per_wavelength: float = 6.0
    tau: float = 0.5
    # nodes per direction of the extracted patch; 0 follows the sampling spacing
    resolution: int = 0


@dataclass(frozen=True)
class InversionConfig:
    collocation: int = 4
    q_ratio: float = 0.15
    delta_trunc: float = 0.001
    mode: str = "diagonal"
    method: str = "tikhonov"
    # incident records combined for the FOD; 0 uses Q + 1
    sources: int = 0
    geometry_oracle: bool = False


_SECTIONS = {
    "medium": MediumConfig,
    "geometry": GeometryConfig,
    "frequency": FrequencyConfig,
    "grid": GridConfig,
    "stiffness": StiffnessConfig,
    "noise": NoiseConfig,
    "glsm": GlsmConfig,
    "inversion": InversionConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    medium: MediumConfig = field(default_factory=MediumConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    frequency: FrequencyConfig = field(default_factory=FrequencyConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    stiffness: StiffnessConfig = field(default_factory=StiffnessConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    glsm: GlsmConfig = field(default_factory=GlsmConfig)
    inversion: InversionConfig = field(default_factory=InversionConfig)

    def elastic_medium(self) -> ElasticMedium:
        return ElasticMedium.from_wave_speeds(self.medium.c_p, self.medium.c_s, self.medium.rho)

    @property
    def fracture_length(self) -> float:
        if self.geometry.kind == "penny":
            return 2 * self.geometry.radius
        return self.geometry.arclength

    @property
    def omega(self) -> float:
        k_s = self.frequency.k_s
        if k_s <= 0:
            k_s = 2 * np.pi / (self.frequency.wavelength_ratio * self.fracture_length)
        return float(k_s * self.medium.c_s)

    @property
    def shear_wavelength(self) -> float:
        return 2 * np.pi * self.medium.c_s / self.omega

    def observation_grid(self) -> ObservationGrid:
        return ObservationGrid(self.grid.n_theta, self.grid.n_phi)

    def true_mesh(self) -> FractureMesh:
        g = self.geometry
        if g.kind == "penny":
            return build_penny(g.radius, g.rings)
        return build_cylindrical_patch(g.width, g.arclength, g.radius, g.n_u, g.n_v)

    @property
    def sampling_spacing(self) -> float:
        return self.shear_wavelength / self.glsm.points_per_wavelength

    def sampling_points(self) -> np.ndarray:
        return sampling_grid(self.glsm.lower, self.glsm.upper, self.sampling_spacing)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        noise: Optional[float] = None,
        geometry_oracle: Optional[bool] = None,
    ) -> "ExperimentConfig":
        """Apply command-line flags; `None` keeps the configured value."""
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, noise=dataclasses.replace(cfg.noise, seed=seed))
        if noise is not None:
            cfg = dataclasses.replace(cfg, noise=dataclasses.replace(cfg.noise, level=noise))
        if geometry_oracle is not None:
            cfg = dataclasses.replace(
                cfg, inversion=dataclasses.replace(cfg.inversion, geometry_oracle=geometry_oracle)
            )
        validate(cfg)
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name}
        for section in _SECTIONS:
            values = dataclasses.asdict(getattr(self, section))
            out[section] = {k: _plain(v) for k, v in values.items()}
        return out

    def to_toml(self) -> str:
        return toml.dumps(self.to_dict())


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _levels(pairs: Levels) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


# Presets


def _preset(name: str, pattern: str, mini: bool) -> ExperimentConfig:
    geometry = GeometryConfig(n_u=8, n_v=10) if mini else GeometryConfig(n_u=14, n_v=18)
    grid = GridConfig(12, 8) if mini else GridConfig(25, 12)
    return ExperimentConfig(
        name=name,
        geometry=geometry,
        grid=grid,
        stiffness=StiffnessConfig(pattern=pattern),
    )


PRESETS: Dict[str, ExperimentConfig] = {
    "zebra": _preset("zebra", "zebra", mini=False),
    "zebra-mini": _preset("zebra-mini", "zebra", mini=True),
    "cheetah": _preset("cheetah", "cheetah", mini=False),
    "cheetah-mini": _preset("cheetah-mini", "cheetah", mini=True),
}


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"Unknown preset '{name}'. Must be one of {sorted(PRESETS)}", key="preset") from None


# Loading


def _line_of(text: str, section: Optional[str], key: str) -> Optional[int]:
    """1-based line of ``key = ...`` (inside ``[section]`` when given), if it can be found."""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[([^\]]+)\]", stripped)
        if header:
            current = header.group(1).strip()
            if section is None and current == key:
                return lineno
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return lineno
    return None


def _coerce(value, default, key: str, line: Optional[int]):
    def fail(expected: str):
        raise ConfigError(f"Expected {expected}, got {value!r}", key=key, line=line)

    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail("true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            fail("a string")
        return value
    if isinstance(default, tuple) and default and isinstance(default[0], tuple):
        if not isinstance(value, list) or not value:
            fail("a non-empty list of [real, imag] pairs")
        pairs = []
        for pair in value:
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(c, (int, float)) for c in pair)):
                fail("a list of [real, imag] pairs")
            pairs.append((float(pair[0]), float(pair[1])))
        return tuple(pairs)
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default):
            fail(f"a list of {len(default)} numbers")
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value):
            fail(f"a list of {len(default)} numbers")
        return tuple(float(c) for c in value)
    return value


def parse_experiment(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse TOML text on top of `base` (or the preset the text names, or the defaults)."""
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as exc:
        hint = " (write every number in an array as a float, e.g. -1.0)" if "homogeneous" in exc.msg else ""
        raise ConfigError(f"Malformed config: {exc.msg}{hint}", line=exc.lineno) from exc

    preset = data.pop("preset", None)
    name = data.pop("name", None)
    if preset is not None:
        if not isinstance(preset, str):
            raise ConfigError("Preset must be a string", key="preset", line=_line_of(text, None, "preset"))
        cfg = get_preset(preset)
    else:
        cfg = base if base is not None else ExperimentConfig()
    if name is not None:
        cfg = dataclasses.replace(cfg, name=str(name))

    for section, values in data.items():
        if section not in _SECTIONS:
            raise ConfigError(
                f"Unknown section. Must be one of {sorted(_SECTIONS)}", key=section, line=_line_of(text, None, section)
            )
        if not isinstance(values, dict):
            raise ConfigError("Expected a table", key=section, line=_line_of(text, None, section))
        current = getattr(cfg, section)
        known = {f.name for f in dataclasses.fields(current)}
        updates = {}
        for key, value in values.items():
            line = _line_of(text, section, key)
            if key not in known:
                raise ConfigError(f"Unknown key. Must be one of {sorted(known)}", key=f"{section}.{key}", line=line)
            updates[key] = _coerce(value, getattr(current, key), f"{section}.{key}", line)
        cfg = dataclasses.replace(cfg, **{section: dataclasses.replace(current, **updates)})

    validate(cfg, text)
    return cfg


def load_experiment(path: Union[str, Path], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} does not exist")
    return parse_experiment(path.read_text(), base)


def validate(cfg: ExperimentConfig, text: str = ""):
    """Raise `ConfigError` for values no run can use."""

    def check(ok: bool, section: str, key: str, msg: str):
        if not ok:
            raise ConfigError(msg, key=f"{section}.{key}", line=_line_of(text, section, key) if text else None)

    try:
        cfg.elastic_medium()
    except InvalidError as exc:
        raise ConfigError(str(exc), key="medium") from exc
    g = cfg.geometry
    check(g.kind in GEOMETRY_KINDS, "geometry", "kind", f"Geometry must be one of {list(GEOMETRY_KINDS)}")
    check(g.width > 0 and g.arclength > 0 and g.radius > 0, "geometry", "radius", "Dimensions must be positive")
    check(g.n_u >= 2 and g.n_v >= 2 and g.rings >= 2, "geometry", "n_u", "Need at least 2 divisions")
    check(cfg.frequency.wavelength_ratio > 0, "frequency", "wavelength_ratio", "Ratio must be positive")
    check(cfg.grid.n_theta >= 1 and cfg.grid.n_phi >= 1, "grid", "n_theta", "Grid must not be empty")
    s = cfg.stiffness
    check(s.pattern in PATTERNS, "stiffness", "pattern", f"Pattern must be one of {list(PATTERNS)}")
    for key in ("k_n", "k_s"):
        levels = _levels(getattr(s, key))
        check(bool(np.all(levels.imag <= 0)), "stiffness", key, "Stiffness levels need a non-positive imaginary part")
        check(s.pattern == "uniform" or len(levels) >= 2, "stiffness", key, "Pattern needs two stiffness levels")
    check(s.stripes >= 1, "stiffness", "stripes", "Stripe count must be positive")
    check(s.spots >= 1 and s.spot_radius > 0, "stiffness", "spots", "Spots need a positive count and radius")
    check(0 <= cfg.noise.level < 1, "noise", "level", "Noise level must lie in [0, 1)")
    check(0 < cfg.glsm.tau < 1, "glsm", "tau", "Threshold fraction must lie in (0, 1)")
    check(
        all(lo < hi for lo, hi in zip(cfg.glsm.lower, cfg.glsm.upper)), "glsm", "upper", "Box must have positive size"
    )
    check(cfg.glsm.points_per_wavelength > 0, "glsm", "points_per_wavelength", "Must be positive")
    inv = cfg.inversion
    check(inv.collocation in (1, 3, 4), "inversion", "collocation", "Collocation layout must be 1, 3 or 4")
    check(0 < inv.q_ratio < 1, "inversion", "q_ratio", "Q ratio must lie in (0, 1)")
    check(inv.delta_trunc > 0, "inversion", "delta_trunc", "Truncation threshold must be positive")
    check(inv.mode in MODES, "inversion", "mode", f"Mode must be one of {list(MODES)}")
    check(inv.method in REGULARIZERS, "inversion", "method", f"Method must be one of {sorted(REGULARIZERS)}")
    check(inv.sources >= 0, "inversion", "sources", "Source count must be non-negative")


# Stiffness patterns


def make_stiffness_pattern(name: str, params: StiffnessConfig, mesh: FractureMesh, points) -> StiffnessField:
    """Diagonal stiffness ``diag(κ_n, κ_s, κ_s)`` at `points`, laid out in the mesh's own coordinates.

    * ``uniform``: the first level everywhere.
    * ``zebra``: `stripes` bands across the width coordinate alternating between the two levels.
    * ``cheetah``: a smooth blend ``(1 - w) κ_0 + w κ_1`` with ``w`` a clipped sum of Gaussian spots at
      seeded random centres. Convex blending keeps ``Im κ <= 0``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k_n = _levels(params.k_n)
    k_s = _levels(params.k_s)
    if name == "uniform":
        w = np.zeros(len(points))
    else:
        if len(k_n) < 2 or len(k_s) < 2:
            raise InvalidError(f"Pattern '{name}' needs two stiffness levels")
        uv = mesh.pattern_coordinates(points)
        if name == "zebra":
            if params.stripes < 1:
                raise InvalidError(f"Stripe count must be positive, got {params.stripes}")
            band = np.clip(np.floor(uv[:, 1] * params.stripes), 0, params.stripes - 1).astype(int)
            w = (band % 2).astype(float)
        elif name == "cheetah":
            if params.spots < 1 or params.spot_radius <= 0:
                raise InvalidError(f"Cheetah pattern needs spots >= 1 and a positive radius, got {params.spots}")
            rng = np.random.default_rng(params.spot_seed)
            centers = rng.uniform(0.1, 0.9, size=(params.spots, 2))
            d2 = np.sum((uv[:, None, :] - centers[None]) ** 2, axis=-1)
            w = np.clip(np.exp(-d2 / params.spot_radius**2).sum(axis=-1), 0.0, 1.0)
        else:
            raise InvalidError(f"Unknown stiffness pattern '{name}'. Must be one of {list(PATTERNS)}")
    kn = (1 - w) * k_n[0] + w * (k_n[1] if len(k_n) > 1 else k_n[0])
    ks = (1 - w) * k_s[0] + w * (k_s[1] if len(k_s) > 1 else k_s[0])
    return StiffnessField.normal_shear(points, kn, ks)
