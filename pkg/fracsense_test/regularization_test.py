# Copyright Fracsense Authors 2026
import numpy as np
import pytest

from fracsense.exception import InvalidError, RegularizationWarning
from fracsense.regularization import (
    DiagonalFactors,
    SvdFactors,
    discrepancy_tsvd,
    least_norm,
    morozov_tikhonov,
    regularize,
    tikhonov,
)


def _ill_posed(m=30, n=20, seed=0):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
    V, _ = np.linalg.qr(rng.normal(size=(n, n)))
    s = 10.0 ** -np.linspace(0, 6, n)
    A = (U * s) @ V.T
    x = rng.normal(size=n)
    return A, x, A @ x


def test_morozov_meets_discrepancy():
    A, _, b = _ill_posed()
    sol = morozov_tikhonov(SvdFactors(A), b, 0.05)
    assert sol.method == "tikhonov"
    assert sol.parameter > 0
    assert sol.achievement == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.norm(A @ sol.x - b) / np.linalg.norm(b) == pytest.approx(0.05, rel=1e-6)


def test_smaller_discrepancy_gives_larger_solution():
    A, _, b = _ill_posed()
    factors = SvdFactors(A)
    loose = morozov_tikhonov(factors, b, 0.1)
    tight = morozov_tikhonov(factors, b, 0.01)
    assert tight.parameter < loose.parameter
    assert np.linalg.norm(tight.x) > np.linalg.norm(loose.x)


def test_tsvd_keeps_fewest_modes():
    A, _, b = _ill_posed()
    factors = SvdFactors(A)
    sol = discrepancy_tsvd(factors, b, 0.05)
    k = int(sol.parameter)
    assert sol.residual <= 0.05
    assert 0 < k < factors.rank
    beta = factors.project(b)
    fewer = factors.expand(np.concatenate([beta[: k - 1] / factors.s[: k - 1], np.zeros(len(beta) - k + 1)]))
    assert np.linalg.norm(A @ fewer - b) > 0.05 * np.linalg.norm(b)


def test_zero_delta_is_least_norm():
    A, x, _ = _ill_posed(n=5)
    A = A + np.eye(30, 5)
    b = A @ x
    sol = regularize(SvdFactors(A), b, 0.0)
    assert sol.method == "unregularized"
    assert np.allclose(sol.x, x)
    assert sol.residual < 1e-6


def test_unfittable_data_falls_back_with_warning():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(20, 5))
    b = rng.normal(size=20)
    with pytest.warns(RegularizationWarning):
        sol = morozov_tikhonov(SvdFactors(A), b, 0.01)
    assert sol.method == "least-norm"
    assert np.allclose(sol.x, np.linalg.lstsq(A, b, rcond=None)[0])
    with pytest.warns(RegularizationWarning):
        discrepancy_tsvd(SvdFactors(A), b, 0.01)


def test_full_discrepancy_returns_zero():
    A, _, b = _ill_posed()
    sol = regularize(SvdFactors(A), b, 1.0)
    assert sol.method == "zero"
    assert not sol.x.any()


def test_diagonal_factors_match_dense():
    a = np.array([3.0, -1j, 0.5, 2 - 2j])
    b = np.array([1.0, 2.0, -1.0, 1j])
    diag = DiagonalFactors(a)
    assert np.allclose(diag.s, np.sort(np.abs(a))[::-1])
    assert np.allclose(least_norm(diag, b).x, b / a)
    alpha = 0.3
    assert np.allclose(tikhonov(diag, b, alpha), a.conj() * b / (np.abs(a) ** 2 + alpha))
    dense = SvdFactors(np.diag(a))
    assert np.allclose(tikhonov(dense, b, alpha), tikhonov(diag, b, alpha))
    assert morozov_tikhonov(diag, b, 0.1).parameter == pytest.approx(morozov_tikhonov(dense, b, 0.1).parameter)


def test_diagonal_zero_entries():
    diag = DiagonalFactors(np.array([2.0, 0.0]))
    assert diag.rank == 1
    sol = least_norm(diag, np.array([4.0, 1.0]))
    assert np.allclose(sol.x, [2.0, 0.0])
    assert sol.residual == pytest.approx(1 / np.sqrt(17))


def test_invalid_arguments():
    factors = DiagonalFactors(np.ones(3))
    with pytest.raises(InvalidError):
        regularize(factors, np.ones(3), 0.1, method="lcurve")
    with pytest.raises(InvalidError):
        morozov_tikhonov(factors, np.ones(3), -0.1)
    with pytest.raises(InvalidError):
        tikhonov(factors, np.ones(3), -1.0)
