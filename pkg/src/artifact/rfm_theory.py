"""Deterministic equivalents for random-features ridge regression.

Risk and norm share one solve of the (nu1, nu2) equations, so the risk terms
embedded in the norm bias are the very same floats ``risk_rfm`` returns.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, ThresholdError
from .fixed_point import THRESHOLD_BAND, solve_nu_pair, solve_ridgeless_level, upsilon_chi
from .linear_theory import BiasVariance, _require_kind
from .spectral_model import SpectralModel, quad_forms, spectral_sum


@dataclass(frozen=True)
class RFMParts:
    nu1: float
    nu2: float
    upsilon: float
    chi: float
    df2: float
    risk: BiasVariance
    norm: BiasVariance


def rfm_equivalents(model: SpectralModel, n: int, p: int, lam: float) -> RFMParts:
    """Solve once and assemble both the risk and the norm equivalents."""
    _require_kind(model, "rfm")
    if not lam > 0:
        raise DomainError("ridge equivalents need lambda > 0; use the min-norm functions for lambda = 0")
    sol = solve_nu_pair(model, n, p, lam)
    nu1, nu2 = sol.companion, sol.primal
    ups, chi = upsilon_chi(model, n, p, nu1, nu2)
    if not ups < 1.0:
        raise DomainError(f"Upsilon={ups:.6g} >= 1 at (n={n}, p={p}, lambda={lam:g}); "
                          f"the equivalents are unstable there")
    q = quad_forms(model, nu2)
    df2 = spectral_sum(model, nu2, 2, 2)
    s2 = model.noise_var
    risk = BiasVariance(nu2 * nu2 * (q.q_inv2 + chi * q.q_lam_inv2) / (1.0 - ups),
                        s2 * ups / (1.0 - ups))
    scale = p * chi / n
    norm = BiasVariance(p * q.q_lam_inv2 / (p - df2) + scale * risk.bias,
                        scale / ups * risk.variance)
    return RFMParts(nu1, nu2, ups, chi, df2, risk, norm)


def risk_rfm(model: SpectralModel, n: int, p: int, lam: float) -> BiasVariance:
    return rfm_equivalents(model, n, p, lam).risk


def norm_rfm(model: SpectralModel, n: int, p: int, lam: float) -> BiasVariance:
    return rfm_equivalents(model, n, p, lam).norm


# --------------------------------------------------------------------------- ridgeless


def _check(model: SpectralModel, n: int, p: int) -> None:
    _require_kind(model, "rfm")
    if n < 1 or p < 1:
        raise DomainError("n and p must be at least 1")
    if abs(p - n) / n < THRESHOLD_BAND:
        raise ThresholdError(f"p={p} is at the interpolation threshold n={n}")


def risk_rfm_minnorm(model: SpectralModel, n: int, p: int) -> BiasVariance:
    _check(model, n, p)
    s2 = model.noise_var
    if p < n:
        lam_p = solve_ridgeless_level(model, p)
        q = quad_forms(model, lam_p)
        return BiasVariance(n * lam_p * q.q_inv1 / (n - p), s2 * p / (n - p))
    lam_n = solve_ridgeless_level(model, n)
    q = quad_forms(model, lam_n)
    df2 = spectral_sum(model, lam_n, 2, 2)
    bias = n * lam_n ** 2 * q.q_inv2 / (n - df2) + n * lam_n * q.q_inv1 / (p - n)
    return BiasVariance(bias, s2 * df2 / (n - df2) + s2 * n / (p - n))


def norm_rfm_minnorm(model: SpectralModel, n: int, p: int,
                     ridge_limit: bool = False) -> BiasVariance:
    """Min-norm estimator norm.

    Below the threshold the first bias term is p<theta, L (L+l_p)^-2 theta>/(n - df2).
    With ``ridge_limit=True`` the denominator is p - df2 instead, which is what the
    ridge equivalent converges to as lambda -> 0.
    """
    _check(model, n, p)
    s2 = model.noise_var
    if p < n:
        lam_p = solve_ridgeless_level(model, p)
        q = quad_forms(model, lam_p)
        df2 = spectral_sum(model, lam_p, 2, 2)
        gap = (p if ridge_limit else n) - df2
        bias = p * q.q_lam_inv2 / gap + p * q.q_inv1 / (n - p)
        return BiasVariance(bias, s2 * p / (lam_p * (n - p)))
    lam_n = solve_ridgeless_level(model, n)
    q = quad_forms(model, lam_n)
    return BiasVariance(p * q.q_inv1 / (p - n), s2 * p / (lam_n * (p - n)))
