# Copyright Fracsense Authors 2026
"""Spectral regularization of ill-posed linear systems.

Every solver works on a factorization ``A = U diag(s) Vᴴ`` through two maps: `project` gives the
data coefficients ``Uᴴ b`` and `expand` maps spectral coefficients back to the unknowns. Dense
systems use the thin SVD; diagonal systems (one unknown per equation) use their own trivial
factorization so they never form a dense matrix.

Relative quantities throughout: ``delta`` is a fraction of ``‖b‖`` and residuals are reported as
``‖A x - b‖ / ‖b‖``.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .config import logger
from .exception import InvalidError, RegularizationWarning

_LOG_ALPHA_SPAN = 30.0


class SpectralFactors:
    s: np.ndarray  # nonincreasing
    shape: tuple

    def project(self, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def expand(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        return int(np.sum(self.s > self.s[0] * max(self.shape) * np.finfo(float).eps)) if len(self.s) else 0


class SvdFactors(SpectralFactors):
    def __init__(self, matrix: np.ndarray):
        self.shape = matrix.shape
        self.U, self.s, self.Vh = np.linalg.svd(matrix, full_matrices=False)

    def project(self, b):
        return self.U.conj().T @ b

    def expand(self, coeffs):
        return self.Vh.conj().T @ coeffs


class DiagonalFactors(SpectralFactors):
    """``A = diag(a)``: ``U`` carries the phases of ``a``, ``V`` is a permutation sorting ``|a|``."""

    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=complex)
        self.shape = (len(a), len(a))
        self.order = np.argsort(-np.abs(a), kind="stable")
        self.s = np.abs(a)[self.order]
        self.phase = np.where(a == 0, 1.0, a / np.where(a == 0, 1.0, np.abs(a)))

    def project(self, b):
        return (self.phase.conj() * b)[self.order]

    def expand(self, coeffs):
        x = np.zeros(len(self.order), dtype=complex)
        x[self.order] = coeffs
        return x


@dataclass(frozen=True, eq=False)
class RegularizedSolution:
    x: np.ndarray
    method: str
    parameter: float  # Tikhonov weight, or retained rank for truncated SVD
    residual: float
    target: float

    @property
    def achievement(self) -> float:
        """Achieved over requested discrepancy; 1 when the principle is met exactly."""
        return self.residual / self.target if self.target > 0 else float("nan")


def _norms(factors: SpectralFactors, b: np.ndarray):
    beta = factors.project(b)
    norm_b = float(np.linalg.norm(b))
    # part of b outside the range of A
    b_perp = float(np.sqrt(max(norm_b**2 - float(np.linalg.norm(beta)) ** 2, 0.0)))
    return beta, norm_b, b_perp


def _tikhonov_residual(s, beta, b_perp, alpha):
    return np.sqrt(np.sum((alpha / (s**2 + alpha)) ** 2 * np.abs(beta) ** 2) + b_perp**2)


def tikhonov(factors: SpectralFactors, b: np.ndarray, alpha: float) -> np.ndarray:
    """Minimizer of ``‖A x - b‖² + α ‖x‖²``."""
    if alpha < 0:
        raise InvalidError(f"Tikhonov weight must be non-negative, got {alpha}")
    beta = factors.project(b)
    s = factors.s
    return factors.expand(s / (s**2 + alpha) * beta)


def least_norm(factors: SpectralFactors, b: np.ndarray, method: str = "least-norm") -> RegularizedSolution:
    beta, norm_b, b_perp = _norms(factors, b)
    s = factors.s
    keep = np.arange(len(s)) < factors.rank
    coeffs = np.zeros_like(beta)
    coeffs[keep] = beta[keep] / s[keep]
    residual = float(np.sqrt(np.sum(np.abs(beta[~keep]) ** 2) + b_perp**2)) / norm_b if norm_b > 0 else 0.0
    return RegularizedSolution(factors.expand(coeffs), method, 0.0, residual, 0.0)


def _zero(factors: SpectralFactors, b, target) -> RegularizedSolution:
    n = factors.shape[1]
    return RegularizedSolution(np.zeros(n, dtype=complex), "zero", np.inf, 1.0 if np.any(b) else 0.0, target)


def morozov_tikhonov(factors: SpectralFactors, b: np.ndarray, delta: float) -> RegularizedSolution:
    """Tikhonov solution with ``α`` chosen so that ``‖A x - b‖ = delta ‖b‖``.

    The discrepancy is monotone in ``α``; the root is bracketed on ``log α`` around ``s_max²``.
    When ``delta ‖b‖`` is below the part of ``b`` no solution can fit, the least-norm solution
    is returned with a `RegularizationWarning`.
    """
    if delta < 0:
        raise InvalidError(f"Noise level must be non-negative, got {delta}")
    beta, norm_b, b_perp = _norms(factors, b)
    target = delta * norm_b
    if norm_b == 0 or delta >= 1:
        return _zero(factors, b, delta)
    s = factors.s
    if target <= b_perp * (1 + 1e-12) or s[0] == 0:
        msg = (
            f"Discrepancy {delta:.3g} is below the unfittable part of the data ({b_perp / norm_b:.3g}); "
            "using least norm"
        )
        warnings.warn(msg, RegularizationWarning)
        logger.warning(msg)
        sol = least_norm(factors, b)
        return RegularizedSolution(sol.x, sol.method, 0.0, sol.residual, delta)

    def excess(log_alpha):
        return _tikhonov_residual(s, beta, b_perp, np.exp(log_alpha)) - target

    center = 2 * np.log(s[0])
    lo, hi = center - _LOG_ALPHA_SPAN, center + _LOG_ALPHA_SPAN
    if excess(lo) > 0 or excess(hi) < 0:
        msg = f"Could not bracket the discrepancy root for delta={delta:.3g}; using least norm"
        warnings.warn(msg, RegularizationWarning)
        logger.warning(msg)
        sol = least_norm(factors, b)
        return RegularizedSolution(sol.x, sol.method, 0.0, sol.residual, delta)
    log_alpha = scipy.optimize.brentq(excess, lo, hi, xtol=1e-10, rtol=1e-12)
    alpha = float(np.exp(log_alpha))
    x = factors.expand(s / (s**2 + alpha) * beta)
    residual = float(_tikhonov_residual(s, beta, b_perp, alpha)) / norm_b
    logger.debug(f"Morozov: alpha={alpha:.3e}, residual={residual:.4g} (target {delta:.4g})")
    return RegularizedSolution(x, "tikhonov", alpha, residual, delta)


def discrepancy_tsvd(factors: SpectralFactors, b: np.ndarray, delta: float) -> RegularizedSolution:
    """Truncated SVD keeping the fewest leading modes whose residual is within ``delta ‖b‖``."""
    if delta < 0:
        raise InvalidError(f"Noise level must be non-negative, got {delta}")
    beta, norm_b, b_perp = _norms(factors, b)
    if norm_b == 0 or delta >= 1:
        return _zero(factors, b, delta)
    rank = factors.rank
    tail = np.abs(beta[:rank]) ** 2
    # residual² after keeping k modes, k = 0..rank
    residual2 = np.concatenate([np.cumsum(tail[::-1])[::-1], [0.0]]) + np.sum(np.abs(beta[rank:]) ** 2) + b_perp**2
    hits = np.flatnonzero(np.sqrt(residual2) <= delta * norm_b)
    if len(hits):
        k = int(hits[0])
    else:
        k = rank
        msg = f"Truncated SVD cannot reach discrepancy {delta:.3g}; keeping all {rank} modes"
        warnings.warn(msg, RegularizationWarning)
        logger.warning(msg)
    coeffs = np.zeros_like(beta)
    coeffs[:k] = beta[:k] / factors.s[:k]
    return RegularizedSolution(factors.expand(coeffs), "tsvd", float(k), float(np.sqrt(residual2[k])) / norm_b, delta)


REGULARIZERS = {
    "tikhonov": morozov_tikhonov,
    "tsvd": discrepancy_tsvd,
}


def regularize(factors: SpectralFactors, b: np.ndarray, delta: float, method: str = "tikhonov") -> RegularizedSolution:
    """Dispatch on `method`; ``delta == 0`` asks for the unregularized (least-norm) solution."""
    if method not in REGULARIZERS:
        raise InvalidError(f"Unknown regularization method '{method}'. Must be one of {sorted(REGULARIZERS)}")
    if delta == 0:
        return least_norm(factors, b, method="unregularized")
    return REGULARIZERS[method](factors, b, delta)

