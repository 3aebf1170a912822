"""Deterministic equivalents for linear ridge regression: test risk and estimator norm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, ThresholdError
from .fixed_point import THRESHOLD_BAND, solve_lambda_star, solve_ridgeless_level
from .spectral_model import SpectralModel, quad_forms, resolvent_trace_sq, spectral_sum


@dataclass(frozen=True)
class BiasVariance:
    bias: float
    variance: float

    @property
    def total(self) -> float:
        return self.bias + self.variance


def _require_kind(model: SpectralModel, kind: str) -> None:
    if model.kind != kind:
        raise DomainError(f"expected a {kind} model, got kind={model.kind!r}")


@dataclass(frozen=True)
class _LinearParts:
    lam_star: float
    df2: float
    risk: BiasVariance
    norm: BiasVariance


def _linear_parts(model: SpectralModel, n: int, lam: float) -> _LinearParts:
    _require_kind(model, "linear")
    if not lam > 0:
        raise DomainError("ridge equivalents need lambda > 0; use the min-norm functions for lambda = 0")
    t = solve_lambda_star(model, n, lam).primal
    df2 = spectral_sum(model, t, 2, 2)
    if not df2 < n:
        raise DomainError(f"df2={df2:.6g} >= n={n}: variance is degenerate")
    q = quad_forms(model, t)
    s2 = model.noise_var
    risk_bias = t * t * q.q_lam_inv2 / (1.0 - df2 / n)
    risk = BiasVariance(risk_bias, s2 * df2 / (n - df2))
    tr = resolvent_trace_sq(model, t)
    norm = BiasVariance(q.q_lam2_inv2 + tr / n * risk_bias, s2 * tr / (n - df2))
    return _LinearParts(t, df2, risk, norm)


def linear_equivalents(model: SpectralModel, n: int, lam: float) -> tuple[BiasVariance, BiasVariance]:
    """(risk, norm) from one fixed-point solve."""
    parts = _linear_parts(model, n, lam)
    return parts.risk, parts.norm


def risk_linear(model: SpectralModel, n: int, lam: float) -> BiasVariance:
    return _linear_parts(model, n, lam).risk


def norm_linear(model: SpectralModel, n: int, lam: float) -> BiasVariance:
    return _linear_parts(model, n, lam).norm


# --------------------------------------------------------------------------- ridgeless


def _minnorm_model(model: SpectralModel, n: int, d: int | None) -> SpectralModel:
    _require_kind(model, "linear")
    if model.is_power_law:
        if d is None:
            return model
        model = model.truncated(d)
    elif d is not None and d != model.rank:
        raise DomainError(f"d={d} does not match the rank {model.rank} of the finite model")
    if abs(model.rank - n) / n < THRESHOLD_BAND:
        raise ThresholdError(f"d={model.rank} is at the interpolation threshold n={n}")
    return model


def _minnorm_parts(model: SpectralModel, n: int, d: int | None):
    m = _minnorm_model(model, n, d)
    s2 = m.noise_var
    if m.rank < n:
        dim = m.rank
        risk = BiasVariance(0.0, s2 * dim / (n - dim))
        norm = BiasVariance(m.target_norm_sq(), s2 * m.inverse_trace() / (n - dim))
        return risk, norm
    lam_n = solve_ridgeless_level(m, n)
    df2 = spectral_sum(m, lam_n, 2, 2)
    q = quad_forms(m, lam_n)
    risk = BiasVariance(lam_n * lam_n * q.q_lam_inv2 / (1.0 - df2 / n), s2 * df2 / (n - df2))
    norm = BiasVariance(q.q_lam_inv1, s2 / lam_n)
    return risk, norm


def risk_linear_minnorm(model: SpectralModel, n: int, d: int | None = None) -> BiasVariance:
    """Min-norm interpolator risk.  Power-law models are truncated to ``d`` features."""
    return _minnorm_parts(model, n, d)[0]


def norm_linear_minnorm(model: SpectralModel, n: int, d: int | None = None) -> BiasVariance:
    return _minnorm_parts(model, n, d)[1]


# --------------------------------------------------------------------------- Psi and rho


@dataclass(frozen=True)
class Weight:
    """Weight matrix A, diagonal in the eigenbasis or the target projector beta beta^T.

    ``power`` gives A = Sigma^power (0 is the identity, -1 the inverse); ``values``
    gives an explicit diagonal for finite models; ``target`` selects beta beta^T.
    """

    power: float | None = 0.0
    values: np.ndarray | None = None
    target: bool = False

    @classmethod
    def identity(cls) -> Weight:
        return cls()

    @classmethod
    def spectral_power(cls, power: float) -> Weight:
        return cls(power=power)

    @classmethod
    def diagonal(cls, values) -> Weight:
        return cls(power=None, values=np.asarray(values, dtype=float))

    @classmethod
    def target_projector(cls) -> Weight:
        return cls(power=None, target=True)

    def weighted_sum(self, model: SpectralModel, nu: float, power: float, order: float) -> float:
        """Tr(A Sigma^power (Sigma + nu)^-order)."""
        if self.target:
            return spectral_sum(model, nu, power, order, weighted=True)
        if self.values is not None:
            if model.is_power_law or self.values.size != model.rank:
                raise DomainError("explicit diagonal weights need a finite model of matching rank")
            lam = model.eig
            return math.fsum((self.values * lam ** power / (lam + nu) ** order).tolist())
        return spectral_sum(model, nu, power + self.power, order)


def psi_functionals(model: SpectralModel, n: int, lam: float,
                    weight: Weight | None = None) -> tuple[float, float]:
    """(Psi1, Psi2): Tr(A S (S+l*)^-1) and Tr(A S^2 (S+l*)^-2) / (n (n - df2))."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    weight = weight or Weight.identity()
    t = solve_lambda_star(model, n, lam).primal
    df2 = spectral_sum(model, t, 2, 2)
    if not df2 < n:
        raise DomainError(f"df2={df2:.6g} >= n={n}")
    psi1 = weight.weighted_sum(model, t, 1, 1)
    psi2 = weight.weighted_sum(model, t, 2, 2) / (n * (n - df2))
    return psi1, psi2


def intrinsic_dimension(model: SpectralModel, k: int) -> float:
    """r(k) = sum_{j >= k} sigma_j / sigma_k (1-based k within the rank)."""
    if model.is_power_law:
        return k ** model.alpha * float(special.zeta(model.alpha, k))
    return math.fsum(model.eig[k - 1:].tolist()) / model.eig[k - 1]


def rho_lambda(model: SpectralModel, n: int, lam: float, eta_star: float = 0.25) -> float:
    """Control parameter of the non-asymptotic ridge equivalents."""
    if not 0.0 < eta_star < 0.5:
        raise DomainError("eta_star must lie in (0, 1/2)")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    k = max(1, math.floor(eta_star * n))
    if k > model.rank:
        return 1.0
    sigma_k = model.eigenvalues(k)[-1] if model.is_power_law else model.eig[k - 1]
    big = max(intrinsic_dimension(model, k), float(n))
    return 1.0 + n * sigma_k / lam * (1.0 + big / n * math.log(big))
