"""Effective regularization for ridge (lambda*) and random-features ridge (nu1, nu2).

All equations are monotone in a single scalar, so everything here is plain
bisection on a bracket whose sign change is verified first.  Midpoints are
geometric while the bracket spans more than a factor of four, which keeps the
iteration count low when the bracket starts out many decades wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, ThresholdError
from .spectral_model import SpectralModel, resolvent_trace_sq, spectral_sum

MAX_ITER = 200
THRESHOLD_BAND = 1e-3
LEVEL_TOL = 1e-10


@dataclass(frozen=True)
class FixedPointSolution:
    """primal is lambda* (linear) or nu2 (rfm); companion is nu1 or None."""

    primal: float
    companion: float | None
    residual: float
    iterations: int
    regime: str  # "under" | "over" | "ridge"


def _df1(model: SpectralModel, nu: float) -> float:
    return spectral_sum(model, nu, 1, 1)


def _bisect(fn, lo: float, hi: float, rel_tol: float):
    """Root of an increasing function on [lo, hi] with fn(lo) < 0 < fn(hi)."""
    for it in range(1, MAX_ITER + 1):
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        val = fn(mid)
        if val == 0.0:
            return mid, it
        if val < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            return 0.5 * (lo + hi), it
    raise ConvergenceError(f"bisection did not reach relative width {rel_tol:g} "
                           f"in {MAX_ITER} iterations (bracket [{lo:.6g}, {hi:.6g}])")


def _check_threshold(a: float, n: int, what: str) -> None:
    if abs(a - n) / n < THRESHOLD_BAND:
        raise ThresholdError(f"{what}={a:g} is at the interpolation threshold n={n}; "
                             f"ridgeless quantities diverge there")


def solve_ridgeless_level(model: SpectralModel, count: float) -> float:
    """The nu > 0 with df1(nu) = count (lambda_n for count=n, lambda_p for count=p)."""
    if not count > 0:
        raise DomainError("count must be positive")
    if count >= model.rank:
        raise DomainError(f"df1 < {model.rank} for every nu > 0, so it cannot reach "
                          f"{count:g} (count must be below the rank)")
    hi = model.trace() / count
    lo = hi
    for _ in range(MAX_ITER):
        lo /= 10.0
        if _df1(model, lo) > count:
            break
    else:
        raise ConvergenceError(f"could not bracket the level df1 = {count:g}")
    nu, _ = _bisect(lambda t: count - _df1(model, t), lo, hi, 1e-15)
    residual = abs(_df1(model, nu) - count)
    if residual > LEVEL_TOL * max(1.0, count):
        raise ConvergenceError(f"level residual {residual:.3g} exceeds tolerance")
    return nu


def solve_lambda_star(model: SpectralModel, n: int, lam: float) -> FixedPointSolution:
    """Solve n - lam/t = df1(t) for the effective regularization t = lambda*."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    if lam == 0.0:
        if not model.is_power_law:
            _check_threshold(model.rank, n, "d")
            if model.rank < n:
                return FixedPointSolution(0.0, None, 0.0, 0, "under")
        nu = solve_ridgeless_level(model, n)
        return FixedPointSolution(nu, None, abs(_df1(model, nu) - n), 0, "over")

    def f(t: float) -> float:
        return lam / t + _df1(model, t) - n

    lo, hi = lam / n, (lam + model.trace()) / n
    if not (f(lo) > 0.0 >= f(hi)):
        raise ConvergenceError("lambda* bracket lacks a sign change")
    if f(hi) == 0.0:
        return FixedPointSolution(hi, None, 0.0, 0, "ridge")
    t, its = _bisect(lambda t: -f(t), lo, hi, 1e-12)
    return FixedPointSolution(t, None, abs(f(t)), its, "ridge")


def _nu1_from_nu2(nu2: float, n: int, p: int, lam: float) -> float:
    a = 1.0 - n / p
    s = math.sqrt(a * a + 4.0 * lam / (p * nu2))
    if a >= 0.0:
        return 0.5 * nu2 * (a + s)
    # roots multiply to -lam nu2 / p; avoids cancelling a + s when a < 0
    return 2.0 * lam / (p * (s - a))


def nu_residuals(model: SpectralModel, n: int, p: int, lam: float, nu1: float, nu2: float):
    """Residuals of  n - lam/nu1 = df1(nu2)  and  df1(nu2) = p - p nu1/nu2."""
    d1 = _df1(model, nu2)
    if nu1 > 0:
        first = n - lam / nu1 - d1
    elif lam == 0:
        first = 0.0  # ridgeless p < n: lam/nu1 is 0/0 and only the second equation binds
    else:
        first = math.inf
    return first, d1 - (p - p * nu1 / nu2)


def solve_nu_pair(model: SpectralModel, n: int, p: int, lam: float) -> FixedPointSolution:
    """Solve the coupled random-features equations for (nu1, nu2)."""
    if n < 1 or p < 1:
        raise DomainError("n and p must be at least 1")
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    if lam == 0.0:
        _check_threshold(p, n, "p")
        if p < n:
            nu2 = solve_ridgeless_level(model, p)
            res = abs(_df1(model, nu2) - p)
            return FixedPointSolution(nu2, 0.0, res, 0, "under")
        nu2 = solve_ridgeless_level(model, n)
        nu1 = nu2 * (1.0 - n / p)
        res = max(abs(r) for r in nu_residuals(model, n, p, 0.0, nu1, nu2))
        return FixedPointSolution(nu2, nu1, res, 0, "over")

    ratio = n / p
    a = 1.0 - ratio

    def h(nu2: float) -> float:
        s = math.sqrt(a * a + 4.0 * lam / (p * nu2))
        lhs = 4.0 * (n - lam / nu2) / (p * (1.0 + ratio + s))
        return lhs - 2.0 * _df1(model, nu2) / p

    smallest = 0.0 if model.is_power_law else float(model.eig[-1])
    scale = max(lam / n, smallest)
    lo = 1e-16 * scale
    hi = scale + model.trace() / min(n, p)
    for _ in range(MAX_ITER):
        if h(lo) < 0.0:
            break
        lo /= 10.0
    else:
        raise ConvergenceError("could not bracket nu2 from below")
    for _ in range(MAX_ITER):
        if h(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket nu2 from above")
    nu2, its = _bisect(h, lo, hi, 1e-14)
    nu1 = _nu1_from_nu2(nu2, n, p, lam)
    res = max(abs(r) for r in nu_residuals(model, n, p, lam, nu1, nu2))
    return FixedPointSolution(nu2, nu1, res, its, "ridge")


def upsilon_chi(model: SpectralModel, n: int, p: int, nu1: float, nu2: float):
    """(Upsilon, chi) for a solved pair; p must exceed df2(nu2)."""
    if not nu2 > 0:
        raise DomainError("nu2 must be positive")
    df2 = spectral_sum(model, nu2, 2, 2)
    gap = p - df2
    if not gap > 0:
        raise DomainError(f"p={p} does not exceed df2={df2:.6g}; Upsilon and chi are singular")
    ratio = nu1 / nu2
    upsilon = (p / n) * ((1.0 - ratio) ** 2 + ratio ** 2 * df2 / gap)
    chi = resolvent_trace_sq(model, nu2) / gap
    return upsilon, chi
