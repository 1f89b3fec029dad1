# Copyright Fracsense Authors 2026
import numpy as np
import pytest

from fracsense.exception import ConfigError, InvalidError
from fracsense.experiment import (
    PRESETS,
    ExperimentConfig,
    StiffnessConfig,
    get_preset,
    load_experiment,
    make_stiffness_pattern,
    parse_experiment,
)
from fracsense.mesh import build_cylindrical_patch


def test_presets():
    assert sorted(PRESETS) == ["cheetah", "cheetah-mini", "zebra", "zebra-mini"]
    full, mini = get_preset("zebra"), get_preset("zebra-mini")
    assert (full.geometry.n_u, full.geometry.n_v) == (14, 18)
    assert (full.grid.n_theta, full.grid.n_phi) == (25, 12)
    assert (mini.geometry.n_u, mini.geometry.n_v) == (8, 10)
    assert get_preset("cheetah").stiffness.pattern == "cheetah"
    with pytest.raises(ConfigError) as excinfo:
        get_preset("leopard")
    assert excinfo.value.key == "preset"


def test_derived_quantities():
    cfg = ExperimentConfig()
    assert cfg.fracture_length == pytest.approx(0.55)
    assert cfg.shear_wavelength == pytest.approx(0.7 * 0.55)
    assert cfg.sampling_spacing == pytest.approx(0.7 * 0.55 / 6)
    assert cfg.observation_grid().size == 96
    mesh = cfg.true_mesh()
    assert mesh.n_elements == 80
    points = cfg.sampling_points()
    assert np.all(points >= np.array(cfg.glsm.lower) - 1e-12)


def test_fixed_wavenumber_takes_precedence():
    cfg = parse_experiment("[frequency]\nk_s = 3.0\n[medium]\nc_s = 2.0\nc_p = 4.0\n")
    assert cfg.omega == pytest.approx(6.0)
    assert cfg.shear_wavelength == pytest.approx(2 * np.pi / 3.0)


def test_penny_geometry():
    cfg = parse_experiment('[geometry]\nkind = "penny"\nradius = 0.3\nrings = 4\n')
    assert cfg.fracture_length == pytest.approx(0.6)
    assert cfg.true_mesh().info["kind"] == "penny"


def test_parse_on_top_of_preset():
    text = """
preset = "cheetah-mini"
name = "spots"

[noise]
level = 0.02
seed = 11

[stiffness]
k_n = [[6.0, -1.0], [18.0, -3.5]]
"""
    cfg = parse_experiment(text)
    assert cfg.name == "spots"
    assert cfg.stiffness.pattern == "cheetah"
    assert cfg.noise.level == 0.02 and cfg.noise.seed == 11
    assert cfg.stiffness.k_n == ((6.0, -1.0), (18.0, -3.5))
    assert cfg.grid == get_preset("cheetah-mini").grid


def test_toml_round_trip():
    cfg = get_preset("zebra-mini").with_overrides(seed=5, noise=0.1, geometry_oracle=True)
    again = parse_experiment(cfg.to_toml())
    assert again == cfg


@pytest.mark.parametrize(
    "text, key, line",
    [
        ("[noise]\nlevel = 0.1\nsed = 3\n", "noise.sed", 3),
        ("\n[wind]\nspeed = 3\n", "wind", 2),
        ("[grid]\nn_theta = 2.5\n", "grid.n_theta", 2),
        ("[noise]\nlevel = 1.5\n", "noise.level", 2),
        ("[stiffness]\nk_n = [[5.0, 1.0], [20.0, -4.0]]\n", "stiffness.k_n", 2),
        ("[stiffness]\n\nstripes = 0\n", "stiffness.stripes", 3),
        ("[inversion]\nmode = \"tensor\"\n", "inversion.mode", 2),
        ('preset = "okapi"\n', "preset", None),
    ],
)
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment(text)
    assert excinfo.value.key == key
    assert excinfo.value.line == line


def test_malformed_toml_reports_line():
    with pytest.raises(ConfigError) as excinfo:
        parse_experiment("[noise]\nlevel = = 3\n")
    assert excinfo.value.line is not None
    assert "Malformed" in str(excinfo.value)


def test_mixed_number_array_names_the_fix():
    with pytest.raises(ConfigError, match="as a float"):
        parse_experiment("[stiffness]\nk_n = [[6.0, -1], [18.0, -3.5]]\n")


def test_override_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(noise=-0.1)


def test_load_experiment(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('preset = "zebra"\n[glsm]\ntau = 0.6\n')
    cfg = load_experiment(path)
    assert cfg.glsm.tau == 0.6
    assert cfg.name == "zebra"
    with pytest.raises(ConfigError):
        load_experiment(tmp_path / "missing.toml")


@pytest.fixture
def fine_patch():
    return build_cylindrical_patch(0.7, 0.55, 0.35, 8, 10)


def test_zebra_pattern(fine_patch):
    points = fine_patch.element_centers
    K = make_stiffness_pattern("zebra", StiffnessConfig(stripes=2), fine_patch, points)
    k_n = K.components[:, 0]
    assert set(np.round(k_n, 12)) == {5 - 1j, 20 - 4j}
    # bands run across the width coordinate
    low = fine_patch.pattern_coordinates(points)[:, 1] < 0.5
    assert np.all(k_n[low] == 5 - 1j)
    assert np.all(k_n[~low] == 20 - 4j)
    assert np.allclose(K.components[:, 1], K.components[:, 2])


def test_cheetah_pattern(fine_patch):
    points = fine_patch.element_centers
    a = make_stiffness_pattern("cheetah", StiffnessConfig(), fine_patch, points)
    b = make_stiffness_pattern("cheetah", StiffnessConfig(), fine_patch, points)
    c = make_stiffness_pattern("cheetah", StiffnessConfig(spot_seed=4), fine_patch, points)
    assert np.array_equal(a.matrices, b.matrices)
    assert not np.array_equal(a.matrices, c.matrices)
    k_n = a.components[:, 0]
    assert np.all(k_n.imag <= 0)
    assert np.all((k_n.real >= 5 - 1e-12) & (k_n.real <= 20 + 1e-12))
    assert len(np.unique(np.round(k_n, 6))) > 2


def test_uniform_pattern(fine_patch):
    K = make_stiffness_pattern("uniform", StiffnessConfig(k_n=((7.0, -1.0),)), fine_patch, fine_patch.nodes)
    assert np.all(K.components[:, 0] == 7 - 1j)
    assert np.all(K.components[:, 1] == 4 - 0.8j)


def test_pattern_errors(fine_patch):
    points = fine_patch.element_centers
    with pytest.raises(InvalidError):
        make_stiffness_pattern("zebra", StiffnessConfig(stripes=0), fine_patch, points)
    with pytest.raises(InvalidError):
        make_stiffness_pattern("tiger", StiffnessConfig(), fine_patch, points)
    with pytest.raises(InvalidError):
        make_stiffness_pattern("zebra", StiffnessConfig(k_n=((5.0, -1.0),)), fine_patch, points)
