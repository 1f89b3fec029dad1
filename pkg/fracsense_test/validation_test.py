# Copyright Fracsense Authors 2026
import pytest

from fracsense import validation
from fracsense.exception import SolverError


@pytest.mark.parametrize(
    "check",
    [validation.check_kernels, validation.check_antiplane_pair, validation.check_far_field_consistency],
)
def test_fast_checks(check):
    passed, detail = check()
    assert passed, detail


def test_run_checks_skips_slow():
    results = validation.run_checks(skip_slow=True, only=[1, 2])
    assert [r.criterion for r in results] == [1, 2]
    assert results[0].passed
    assert results[1].status == "skipped"


def test_run_checks_reports_errors(monkeypatch):
    def broken():
        raise SolverError("singular", condition_number=1e20)

    monkeypatch.setattr(validation, "CHECKS", [validation.Check(99, "broken", False, broken)])
    (result,) = validation.run_checks()
    assert result.status == "fail"
    assert result.detail.startswith("SolverError: singular")


@pytest.mark.slow
@pytest.mark.parametrize("criterion", [c.criterion for c in validation.CHECKS if c.slow])
def test_slow_checks(criterion):
    (result,) = validation.run_checks(only=[criterion])
    assert result.passed, result.detail
