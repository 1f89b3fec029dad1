# Copyright Fracsense Authors 2026
import dataclasses

import numpy as np
import pytest

from fracsense import pipeline
from fracsense._serialization import read_farfield, read_report, read_stiffness
from fracsense.exception import InvalidError, NotFoundError, SolverError, StageError
from fracsense.experiment import get_preset
from fracsense_utils.hash_utils import get_array_sha256_hex


def test_select_sources():
    assert list(pipeline.select_sources(10, 2)) == [0, 27]
    assert list(pipeline.select_sources(3, 5)) == [0, 3, 6, 1, 2]
    chosen = pipeline.select_sources(4, 12)
    assert sorted(chosen) == list(range(12))
    with pytest.raises(InvalidError):
        pipeline.select_sources(4, 1)
    with pytest.raises(InvalidError):
        pipeline.select_sources(4, 13)


def test_stage_tags_failures():
    with pytest.raises(StageError) as excinfo:
        with pipeline.stage("fod"):
            raise SolverError("boom")
    assert excinfo.value.stage == "fod"
    assert isinstance(excinfo.value.cause, SolverError)
    assert str(excinfo.value) == "[fod] SolverError: boom"

    inner = StageError("glsm", ValueError("x"))
    with pytest.raises(StageError) as excinfo:
        with pipeline.stage("stiffness"):
            raise inner
    assert excinfo.value is inner


def test_stage_needs_previous_artifacts(tmp_path, tiny_cfg):
    with pytest.raises(StageError) as excinfo:
        pipeline.fod_stage(tiny_cfg, tmp_path)
    assert excinfo.value.stage == "fod"
    assert isinstance(excinfo.value.cause, NotFoundError)


def test_full_pipeline_with_known_geometry(tmp_path, tiny_cfg):
    result = pipeline.full_pipeline(tiny_cfg, tmp_path)
    assert result.glsm is None
    report = read_report(tmp_path / pipeline.REPORT)
    assert report["run"]["preset"] == "tiny"
    assert report["run"]["geometry_oracle"] is True
    assert set(report) == {"run", "synth", "fod", "stiffness", "artifacts"}
    assert pipeline.FARFIELD in report["artifacts"]
    assert pipeline.INDICATOR_MAP not in report["artifacts"]
    assert report["synth"]["records"] == 3 * 16
    assert report["fod"]["sources"] == result.fod.system.Q + 1
    assert report["fod"]["Q"] >= 1

    data = read_farfield(tmp_path / pipeline.FARFIELD)
    assert np.allclose(data.amplitudes, result.synth.data.amplitudes, rtol=1e-12, atol=1e-14)
    stiffness = read_stiffness(tmp_path / pipeline.STIFFNESS)
    assert stiffness["mode"] == "diagonal"
    assert np.allclose(stiffness["values"], result.stiffness.recovered.values)


def test_pipeline_artifacts_are_deterministic(tmp_path, tiny_cfg):
    first = pipeline.full_pipeline(tiny_cfg, tmp_path / "a").report["artifacts"]
    second = pipeline.full_pipeline(tiny_cfg, tmp_path / "b").report["artifacts"]
    assert first == second
    reseeded = tiny_cfg.with_overrides(seed=tiny_cfg.noise.seed + 1)
    third = pipeline.full_pipeline(reseeded, tmp_path / "c").report["artifacts"]
    assert third[pipeline.FARFIELD] != first[pipeline.FARFIELD]
    assert third[pipeline.MESH_TRUE] == first[pipeline.MESH_TRUE]


def test_staged_run(tmp_path, tiny_cfg):
    synth = pipeline.synth_stage(tiny_cfg, tmp_path)
    assert synth.metrics(tiny_cfg)["records"] == 48
    fod = pipeline.fod_stage(tiny_cfg, tmp_path)
    assert fod.metrics()["Q"] == fod.system.Q
    for name in (pipeline.FOD_RECOMBINED, pipeline.FOD_SINGLE, pipeline.RECOMBINATION):
        assert (tmp_path / name).exists()
    result = pipeline.stiffness_stage(tiny_cfg, tmp_path)
    report = read_report(tmp_path / pipeline.REPORT)
    assert report["stiffness"]["points"] == len(result.recovered.points)
    assert report["stiffness"]["truncation_rank"] == result.truncation
    # earlier stages keep their sections
    assert set(report) == {"run", "synth", "fod", "stiffness", "artifacts"}
    assert report["fod"]["Q"] == fod.system.Q
    assert report["fod"]["fod_sha256"] == get_array_sha256_hex(fod.fod.values)
    assert report["synth"]["clean_data_sha256"] == get_array_sha256_hex(synth.clean.amplitudes)
    assert pipeline.STIFFNESS in report["artifacts"]

    # a new synthesis starts a new report
    pipeline.synth_stage(tiny_cfg, tmp_path)
    assert set(read_report(tmp_path / pipeline.REPORT)) == {"run", "synth", "artifacts"}


def test_stiffness_errors_use_reliable_points(tiny_cfg):
    noiseless = dataclasses.replace(tiny_cfg, noise=dataclasses.replace(tiny_cfg.noise, level=0.0))
    result = pipeline.full_pipeline(noiseless)
    errors = result.stiffness.errors()
    assert errors["reliable_for_metrics"] == int(
        np.count_nonzero(result.stiffness.recovered.reliability >= pipeline.METRIC_RELIABILITY)
    )
    # uniform truth has no spread to correlate with
    assert np.isnan(errors["correlation"])


@pytest.mark.slow
def test_reconstructed_geometry_pipeline(tmp_path):
    cfg = get_preset("zebra-mini")
    result = pipeline.full_pipeline(cfg, tmp_path)
    assert result.glsm is not None
    assert result.glsm.hausdorff < cfg.shear_wavelength / 4
    report = read_report(tmp_path / pipeline.REPORT)
    assert pipeline.GAMMA_BREVE in report["artifacts"]
    assert report["glsm"]["hausdorff_over_wavelength"] < 0.25
