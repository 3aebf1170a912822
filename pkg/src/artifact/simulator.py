"""Monte Carlo ground truth for ridge and random-features ridge regression.

Label noise is integrated out analytically, so each trial returns exact
conditional bias and variance terms given the sampled design.  Every trial
draws from its own stream keyed by (seed, trial index), and results are reduced
in trial order, so the output does not depend on how trials are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ThresholdError
from .fixed_point import THRESHOLD_BAND
from .linear_theory import BiasVariance, Weight
from .spectral_model import SpectralModel


@dataclass(frozen=True)
class SimConfig:
    n: int
    d_or_p: int
    lam: float
    trials: int = 50
    seed: int = 0
    truncation: int | None = None  # ambient dimension K for random features
    workers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.d_or_p < 1:
            raise DomainError("n and d/p must be positive")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.lam < 0:
            raise DomainError("lambda must be non-negative")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")


@dataclass(frozen=True)
class EmpiricalStats:
    """Trial means with standard errors (sample std / sqrt(trials))."""

    risk: BiasVariance
    norm: BiasVariance
    risk_se: BiasVariance
    norm_se: BiasVariance
    risk_total_se: float
    norm_total_se: float
    trials_used: int
    samples: np.ndarray  # trials x (risk bias, risk var, norm bias, norm var)


def _stream(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _spectral_factors(s: np.ndarray, lam: float, cutoff: float):
    """Per-singular-value filters (shrink = lam/(s^2+lam), gain = s^2/(s^2+lam)^2, inv = s/(s^2+lam)).

    With lam = 0 these are the pseudoinverse filters, dropping values below cutoff.
    """
    s2 = s * s
    if lam > 0:
        den = s2 + lam
        return lam / den, s2 / (den * den), s / den
    keep = s > cutoff
    safe = np.where(keep, s, 1.0)
    return (np.where(keep, 0.0, 1.0), np.where(keep, 1.0 / (safe * safe), 0.0),
            np.where(keep, 1.0 / safe, 0.0))


def _cutoff(s: np.ndarray, shape) -> float:
    return max(shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)


def _linear_trial(eig: np.ndarray, beta: np.ndarray, noise_var: float, n: int, lam: float,
                  seed: int, trial: int) -> np.ndarray:
    rng = _stream(seed, trial)
    d = eig.size
    x = rng.standard_normal((n, d)) * np.sqrt(eig)
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    shrink, gain, _ = _spectral_factors(s, lam, _cutoff(s, x.shape))
    w = vt @ beta
    err = beta - vt.T @ w + vt.T @ (w * shrink)
    risk_bias = float(np.dot(eig, err * err))
    kept = 1.0 - shrink
    norm_bias = float(np.sum((w * kept) ** 2))
    sig_v = (vt * vt) @ eig  # v_j^T Sigma v_j
    risk_var = noise_var * float(np.dot(gain, sig_v))
    norm_var = noise_var * float(np.sum(gain))
    return np.array([risk_bias, risk_var, norm_bias, norm_var])


def _rfm_trial(eig: np.ndarray, theta: np.ndarray, noise_var: float, n: int, p: int, lam: float,
               seed: int, trial: int) -> np.ndarray:
    rng = _stream(seed, trial)
    k = eig.size
    g = rng.standard_normal((n, k))
    f = rng.standard_normal((p, k)) * np.sqrt(eig)
    z = g @ f.T / math.sqrt(p)
    u, s, vt = np.linalg.svd(z, full_matrices=False)
    _, gain, inv = _spectral_factors(s, lam, _cutoff(s, z.shape))
    a_hat = vt.T @ (inv * (u.T @ (g @ theta)))
    resid = theta - f.T @ a_hat / math.sqrt(p)
    fv = f.T @ vt.T  # K x r, columns F^T v_j
    risk_var = noise_var / p * float(np.dot(gain, np.sum(fv * fv, axis=0)))
    return np.array([float(resid @ resid), risk_var, float(a_hat @ a_hat),
                     noise_var * float(np.sum(gain))])


def _run_chunk(args) -> list[np.ndarray]:
    fn, payload, trials = args
    return [fn(*payload, t) for t in trials]


def _run_trials(fn, payload: tuple, cfg: SimConfig) -> np.ndarray:
    idx = list(range(cfg.trials))
    if cfg.workers == 1 or cfg.trials == 1:
        rows = [fn(*payload, t) for t in idx]
    else:
        chunks = [idx[i::cfg.workers] for i in range(cfg.workers)]
        chunks = [c for c in chunks if c]
        rows = [None] * cfg.trials
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            for chunk, out in zip(chunks, pool.map(_run_chunk, [(fn, payload, c) for c in chunks])):
                for t, row in zip(chunk, out):
                    rows[t] = row
    return np.vstack(rows)


def _summarize(samples: np.ndarray) -> EmpiricalStats:
    trials = samples.shape[0]
    mean = samples.mean(axis=0)
    if trials > 1:
        se = samples.std(axis=0, ddof=1) / math.sqrt(trials)
        risk_tot = samples[:, 0] + samples[:, 1]
        norm_tot = samples[:, 2] + samples[:, 3]
        rt_se = float(risk_tot.std(ddof=1) / math.sqrt(trials))
        nt_se = float(norm_tot.std(ddof=1) / math.sqrt(trials))
    else:
        se = np.zeros(4)
        rt_se = nt_se = 0.0
    return EmpiricalStats(
        risk=BiasVariance(float(mean[0]), float(mean[1])),
        norm=BiasVariance(float(mean[2]), float(mean[3])),
        risk_se=BiasVariance(float(se[0]), float(se[1])),
        norm_se=BiasVariance(float(se[2]), float(se[3])),
        risk_total_se=rt_se, norm_total_se=nt_se,
        trials_used=trials, samples=samples,
    )


def _finite_arrays(model: SpectralModel, count: int):
    if model.is_power_law:
        return model.eigenvalues(count), model.target_coeffs(count)
    if count > model.rank:
        raise DomainError(f"model rank {model.rank} is smaller than the requested {count} modes")
    return model.eig[:count], model.coef[:count]


def simulate_linear(model: SpectralModel, cfg: SimConfig) -> EmpiricalStats:
    """Empirical risk/norm bias and variance of ridge (or min-norm when lam = 0)."""
    d = cfg.d_or_p
    if not model.is_power_law and model.rank != d:
        raise DomainError(f"model rank {model.rank} differs from d={d}")
    if cfg.lam == 0 and abs(d - cfg.n) / cfg.n < THRESHOLD_BAND:
        raise ThresholdError(f"d={d} is at the interpolation threshold n={cfg.n}")
    eig, beta = _finite_arrays(model, d)
    payload = (eig, beta, model.noise_var, cfg.n, cfg.lam, cfg.seed)
    return _summarize(_run_trials(_linear_trial, payload, cfg))


def simulate_rfm(model: SpectralModel, cfg: SimConfig) -> EmpiricalStats:
    """Empirical quantities for random-features ridge with features Z = G F^T / sqrt(p)."""
    n, p = cfg.n, cfg.d_or_p
    k = cfg.truncation or 10 * max(n, p)
    if k < max(n, p):
        raise DomainError(f"truncation K={k} must be at least max(n, p)={max(n, p)}")
    if not model.is_power_law:
        k = min(k, model.rank)
    if cfg.lam == 0 and abs(p - n) / n < THRESHOLD_BAND:
        raise ThresholdError(f"p={p} is at the interpolation threshold n={n}")
    eig, theta = _finite_arrays(model, k)
    payload = (eig, theta, model.noise_var, n, p, cfg.lam, cfg.seed)
    return _summarize(_run_trials(_rfm_trial, payload, cfg))


def empirical_phi(model: SpectralModel, n: int, lam: float, weight: Weight | None = None,
                  seed: int = 0) -> tuple[float, float, float, float]:
    """(Phi1, Phi2, Phi3, Phi4) on one draw X = T Sigma^(1/2) with R = (X^T X + lam)^-1."""
    if model.is_power_law:
        raise DomainError("empirical_phi needs a finite model; truncate the power law first")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    weight = weight or Weight.identity()
    eig, beta = model.eig, model.coef
    d = eig.size
    x = _stream(seed, 0).standard_normal((n, d)) * np.sqrt(eig)
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    s2 = s * s
    inv = 1.0 / (s2 + lam)
    gain2 = s2 * inv          # eigen-filter of X^T X R
    gain4 = s2 * inv * inv    # eigen-filter of R X^T X R = R - lam R^2
    root = np.sqrt(eig)

    if weight.target:
        u = root * beta
        vu = vt @ u
        ru = vt.T @ (vu * inv) + (u - vt.T @ vu) / lam
        vb = vt @ beta
        phi1 = float(u @ ru)
        phi2 = float(np.sum(vb * vb * gain2))
        phi3 = float(np.dot(eig, ru * ru))
        phi4 = float(np.sum(vu * vu * gain4)) / n
        return phi1, phi2, phi3, phi4

    if weight.values is not None:
        if weight.values.size != d:
            raise DomainError("diagonal weight length must equal the model rank")
        a = weight.values
    else:
        a = eig ** weight.power
    v2 = vt * vt
    r_diag = inv @ v2 + (1.0 - v2.sum(axis=0)) / lam
    phi1 = float(np.dot(a * eig, r_diag))
    phi2 = float(np.dot(a, gain2 @ v2))
    phi4 = float(np.dot(a * eig, gain4 @ v2)) / n
    r = (vt.T * (inv - 1.0 / lam)) @ vt
    r[np.diag_indices(d)] += 1.0 / lam
    phi3 = float(np.einsum("i,ij,j->", a * eig, r * r, eig))
    return phi1, phi2, phi3, phi4
