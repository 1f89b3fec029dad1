# Copyright Fracsense Authors 2026
import pytest

from fracsense.experiment import parse_experiment
from fracsense.kernels import ElasticMedium
from fracsense.mesh import build_cylindrical_patch, build_penny


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def medium():
    return ElasticMedium.from_wave_speeds(c_p=2.08, c_s=1.0)


@pytest.fixture
def penny():
    return build_penny(0.5, 3)


@pytest.fixture
def patch():
    return build_cylindrical_patch(width=0.7, arclength=0.55, radius=0.35, n_u=4, n_v=4)


# small enough for an end-to-end run in a few seconds
TINY_EXPERIMENT = """
name = "tiny"

[geometry]
kind = "penny"
radius = 0.5
rings = 2

[grid]
n_theta = 4
n_phi = 4

[stiffness]
pattern = "uniform"

[inversion]
collocation = 1
geometry_oracle = true
"""


@pytest.fixture
def tiny_cfg():
    return parse_experiment(TINY_EXPERIMENT)


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_EXPERIMENT)
    return path
