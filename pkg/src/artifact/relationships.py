"""Risk-norm relationships and scaling-law exponents.

Exact relations (isotropic ridge, linear min-norm below the threshold, the
random-features over-parameterized line) are identities of the deterministic
equivalents.  The power-law relations come from integral approximations and are
exposed as laws or residual evaluators rather than as equalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fixed_point import solve_ridgeless_level
from .linear_theory import _require_kind
from .rfm_theory import rfm_equivalents
from .spectral_model import SpectralModel, make_power_law, quad_forms, spectral_sum


@dataclass(frozen=True)
class LinearLaw:
    """R = slope * N + intercept."""

    slope: float
    intercept: float
    note: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise DomainError("linear law coefficients must be finite")

    def risk(self, norm: float) -> float:
        return self.slope * norm + self.intercept

    def residual(self, risk: float, norm: float) -> float:
        return risk - self.risk(norm)


# --------------------------------------------------------------------------- isotropic ridge


def isotropic_lambda_star(d: int, n: int, lam: float) -> float:
    """Closed-form effective regularization for Sigma = I_d."""
    return (d + lam - n + math.sqrt(4.0 * lam * n + (n - d - lam) ** 2)) / (2.0 * n)


def isotropic_ridge_residual(d: int, beta_sq: float, sigma2: float, lam: float,
                             risk: float, norm: float) -> float:
    """Cubic identity tying (risk, norm) for ridge with Sigma = I_d; zero on the equivalents."""
    b, r, nn = beta_sq, risk, norm
    return ((b - r - nn) * (b + r - nn) ** 2 * d
            + 2.0 * b * ((b + r - nn) ** 2 - 4.0 * b * r) * lam
            - 2.0 * ((r - nn) ** 2 - b * b) * d * sigma2)


def minnorm_isotropic_risk_from_norm(beta_sq: float, sigma2: float, norm: float,
                                     regime: str) -> float:
    """Min-norm risk as a function of its norm, isotropic features."""
    if regime == "under":
        if norm < beta_sq:
            raise DomainError("below the threshold the norm is at least ||beta||^2")
        return norm - beta_sq
    if regime == "over":
        return math.sqrt((norm - (beta_sq - sigma2)) ** 2 + 4.0 * beta_sq * sigma2) - sigma2
    raise DomainError(f"regime must be 'under' or 'over', got {regime!r}")


def underparam_linear_law(model: SpectralModel, d: int | None = None) -> LinearLaw:
    """Linear min-norm below the threshold: R = d (N - ||beta||^2) / Tr(Sigma^-1)."""
    if model.is_power_law:
        if d is None:
            raise DomainError("Tr(Sigma^-1) diverges for an untruncated power law")
        model = model.truncated(d)
    inv = model.inverse_trace()
    if not math.isfinite(inv):
        raise DomainError("Tr(Sigma^-1) diverges")
    slope = model.rank / inv
    return LinearLaw(slope, -slope * model.target_norm_sq(), "linear min-norm, d < n")


# --------------------------------------------------------------------------- random features


def rfm_overparam_line(model: SpectralModel, n: int) -> LinearLaw:
    """R = lambda_n N + C for min-norm random features with p > n, any p."""
    _require_kind(model, "rfm")
    lam_n = solve_ridgeless_level(model, n)
    q = quad_forms(model, lam_n)
    df2 = spectral_sum(model, lam_n, 2, 2)
    s2 = model.noise_var
    intercept = (-(lam_n * q.q_inv1 + s2)
                 + (n * lam_n ** 2 * q.q_inv2 + s2 * df2) / (n - df2))
    return LinearLaw(lam_n, intercept, "random features min-norm, p > n")


@dataclass(frozen=True)
class FiniteRankRelations:
    """Relations for min-norm random features with Lambda = I_m below the threshold."""

    m: int
    n: int
    beta_sq: float
    sigma2: float

    def variance_residual(self, var_risk: float, var_norm: float) -> float:
        m, n = self.m, self.n
        return var_risk ** 2 - (m - n) / n * var_risk * var_norm - m * self.sigma2 / n * var_norm

    def bias_residual(self, bias_risk: float, bias_norm: float) -> float:
        m, n, b = self.m, self.n, self.beta_sq
        br, bn = bias_risk, bias_norm
        return ((m - n) * bn * (m * br - n * b) * (m * br ** 2 - n * b * b)
                - n * m * (br - b) ** 2 * (m * br ** 2 + n * b * br - 2.0 * n * b * b))

    def asymptote(self, var_norm: float) -> float:
        m, n = self.m, self.n
        return (m - n) / n * var_norm + m * self.sigma2 / (m - n)


def rfm_finite_rank_underparam(m: int, n: int, beta_sq: float, sigma2: float) -> FiniteRankRelations:
    if not n < m:
        raise DomainError("need n < m")
    return FiniteRankRelations(m, n, beta_sq, sigma2)


# --------------------------------------------------------------------------- power-law constants


@dataclass(frozen=True)
class PowerLawConstants:
    """Integral-approximation constants for power-law spectra.

    C3..C6 are exact closed forms where one exists; otherwise the midpoint of the
    known two-sided bound, with the bound width stored in ``widths`` (0 for exact).
    Constants that do not apply to the given r are None.
    """

    alpha: float
    r: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float | None
    C6: float | None
    widths: dict = field(default_factory=dict)
    valid_for: dict = field(default_factory=dict)


def _check_r(r: float) -> None:
    for pole in (0.5, 1.0):
        if abs(r - pole) < 1e-12:
            raise DomainError(f"r={r} sits on a pole of the power-law constants (r = 1/2 or 1)")


def power_law_constants(alpha: float, r: float) -> PowerLawConstants:
    if not alpha > 1:
        raise DomainError("capacity condition violated: need alpha > 1")
    if not r > 0:
        raise DomainError("need r > 0")
    _check_r(r)
    s = math.sin(math.pi / alpha)
    c1 = math.pi / (alpha * s)
    c2 = math.pi * (alpha - 1.0) / (alpha * alpha * s)
    widths = {"C1": 0.0, "C2": 0.0}
    valid = {"C1": "all r", "C2": "all r"}
    c5 = c6 = None
    if r < 0.5:
        s2 = math.sin(2.0 * math.pi * r)
        c3 = math.pi / (alpha * s2)
        c4 = 2.0 * math.pi * r / (alpha * s2)
        widths.update(C3=0.0, C4=0.0)
        valid.update(C3="r < 1/2", C4="r < 1/2")
    else:
        lower = 1.0 / (alpha * (2.0 * r - 1.0))
        c3 = c4 = lower + 0.5
        widths.update(C3=1.0, C4=1.0)
        valid.update(C3="r > 1/2 (bracket midpoint)", C4="r > 1/2 (bracket midpoint)")
        if r < 1.0:
            c5 = math.pi * (1.0 - 2.0 * r) / (alpha * math.sin(2.0 * math.pi * r))
            widths["C5"] = 0.0
            valid["C5"] = "1/2 < r < 1"
        else:
            c6 = 1.0 / (2.0 * alpha * (r - 1.0)) + 0.5
            widths["C6"] = 1.0
            valid["C6"] = "r > 1 (bracket midpoint)"
    return PowerLawConstants(alpha, r, c1, c2, c3, c4, c5, c6, widths, valid)


def power_law_relation(alpha: float, r: float, n: int, regime: str,
                       noise_var: float = 0.0) -> LinearLaw:
    """Approximate min-norm random-features law R ~ (n/C1)^-alpha N + C.

    ``regime`` is "over" (p > n) or "under_near_threshold" (p -> n from below).
    """
    c = power_law_constants(alpha, r)
    base = n / c.C1
    slope = base ** -alpha
    if regime == "over":
        if r < 0.5:
            bias = base ** (-2 * alpha * r) * (c.C2 * c.C3 - c.C1 * c.C4) / (c.C1 - c.C2)
            note = "p > n, r < 1/2: integral approximation of both biases"
        else:
            bias = -base ** -alpha * c.C4
            note = "p > n, r > 1/2: leading order in the C4 shift"
        return LinearLaw(slope, bias + noise_var * (alpha - 2.0), note)
    if regime == "under_near_threshold":
        if r < 0.5:
            bias = (base ** (-2 * alpha * r)
                    * (2 * c.C1 * c.C3 - c.C2 * c.C3 - c.C1 * c.C4) / (c.C1 - c.C2))
            note = "p -> n from below, r < 1/2: over-parameterized line shifted by 2 C3"
        else:
            bias = base ** -alpha * c.C4
            note = "p -> n from below, r > 1/2: over-parameterized line shifted by 2 C4"
        return LinearLaw(slope, bias + noise_var * alpha, note)
    raise DomainError(f"regime must be 'over' or 'under_near_threshold', got {regime!r}")


# --------------------------------------------------------------------------- linear power law, alpha = 1


@dataclass(frozen=True)
class LinearPowerLawRelations:
    """Approximate min-norm bias/variance relations for sigma_k = 1/k, beta_k = k^(-beta/2), d > n.

    Accurate as n approaches d from below.
    """

    beta: int
    d: int

    @property
    def trace(self) -> float:
        return math.fsum(1.0 / k for k in range(1, self.d + 1))

    def lambda_n(self, n: int) -> float:
        return 2.0 * (self.d - n) / self.d ** 2

    def bias_risk(self, bias_norm: float) -> float:
        d, b = self.d, bias_norm
        if self.beta == 0:
            return 2.0 * b * (d - b) / d ** 2
        if self.beta == 1:
            t = self.trace
            rad = 1.0 + 2.0 * b - 2.0 * t
            if not rad > 0:
                raise DomainError("bias norm too far below Tr(Sigma); the relation needs n close to d")
            return 2.0 * (t - b) / (d * math.sqrt(rad))
        return ((216 * b ** 4 - 324 * d ** 2 * b ** 3 + 126 * d ** 4 * b ** 2 + d ** 6 * b - 5 * d ** 8)
                / (2.0 * d ** 5 * (6.0 * b - d ** 2)))

    def variance_risk(self, var_norm: float, sigma2: float) -> float:
        d = self.d
        return 2.0 * var_norm ** 2 / (d * var_norm - d * d * sigma2)

    def bias_residual(self, bias_risk: float, bias_norm: float) -> float:
        return bias_risk - self.bias_risk(bias_norm)

    def variance_residual(self, var_risk: float, var_norm: float, sigma2: float) -> float:
        return var_risk - self.variance_risk(var_norm, sigma2)


def powerlaw_linear_bias_relations(beta: int, d: int, alpha: float = 1.0) -> LinearPowerLawRelations:
    if alpha != 1.0:
        raise DomainError("closed-form relations exist only for alpha = 1")
    if beta not in (-1, 0, 1):
        raise DomainError(f"beta must be -1, 0 or 1, got {beta}")
    return LinearPowerLawRelations(beta, d)


# --------------------------------------------------------------------------- scaling exponents


@dataclass(frozen=True)
class ScalingExponents:
    """R = Theta(n^gamma_n * N^gamma_N) in one of five (q, ell) regions.

    risk_rate and norm_rate are the n-exponents of R and N themselves.
    """

    gamma_n: float
    gamma_N: float
    region: int
    risk_rate: float
    norm_rate: float
    boundary: bool = False


_BOUNDARY_TOL = 1e-9


def scaling_exponents(alpha: float, r: float, q: float, ell: float) -> ScalingExponents:
    """Region map for p = n^q and lambda = n^-(ell - 1), with 0 < r < 1/2."""
    if not 0.0 < r < 0.5:
        raise DomainError("the scaling map is stated for r in (0, 1/2)")
    if not alpha > 1:
        raise DomainError("need alpha > 1")
    if q < 0 or ell < 0:
        raise DomainError("q and ell must be non-negative")
    knee = 1.0 / (2.0 * alpha * r + 1.0)
    m = min(1.0, q, ell / alpha)
    edges = [q - 1.0, ell - alpha, q - ell / alpha, ell - alpha * knee, q - knee]
    ell_limited = q > ell / alpha
    if ell_limited:
        region = 1 if ell > alpha else (2 if ell > alpha * knee else 4)
    else:
        region = 1 if q > 1 else (3 if q > knee else 5)
    relevant = {1: edges[:2], 2: edges[1:4], 3: [edges[0], edges[2], edges[4]],
                4: edges[2:4], 5: edges[2:5:2]}[region]
    boundary = any(abs(e) < _BOUNDARY_TOL for e in relevant)
    table = {
        1: (-alpha, 1.0),
        2: (-ell, 1.0),
        3: (-alpha / (alpha + 1.0), 1.0 / (alpha + 1.0)),
        4: (-1.0, 1.0),
        5: (0.0, -2.0 * r / (1.0 - 2.0 * r)),
    }
    gn, gN = table[region]
    risk_rate = max(m - 1.0, -2.0 * alpha * r * m)
    norm_rate = max((alpha + 1.0) * m - 1.0, alpha * m * (1.0 - 2.0 * r))
    return ScalingExponents(gn, gN, region, risk_rate, norm_rate, boundary)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass(frozen=True)
class ScalingFit:
    exponents: ScalingExponents
    ns: tuple
    risk: tuple
    norm: tuple
    risk_slope: float
    norm_slope: float
    fitted_gamma_n: float
    fitted_gamma_N: float


def fit_scaling(alpha: float, r: float, q: float, ell: float, ns, noise_var: float = 1.0,
                tail_tol: float = 1e-8) -> ScalingFit:
    """Fit the region exponents from theory risk and norm along an n-grid.

    With p = n^q and lambda = n^-(ell-1), the n-slopes a_R and a_N of the theory
    curves satisfy a_R = gamma_n + gamma_N a_N.  One grid cannot separate the two
    exponents, so each is recovered holding the other at its table value:
    fitted gamma_n = a_R - gamma_N a_N and fitted gamma_N = (a_R - gamma_n) / a_N.
    """
    ns = [int(v) for v in ns]
    if len(ns) < 2:
        raise DomainError("insufficient grid: need at least two n values")
    exps = scaling_exponents(alpha, r, q, ell)
    model = make_power_law(alpha, r, noise_var, tail_tol, kind="rfm")
    risks, norms = [], []
    for n in ns:
        p = max(1, round(n ** q))
        lam = float(n) ** (-(ell - 1.0))
        parts = rfm_equivalents(model, n, p, lam)
        risks.append(parts.risk.total)
        norms.append(parts.norm.total)
    a_r = loglog_slope(ns, risks)
    a_n = loglog_slope(ns, norms)
    fitted_n = a_r - exps.gamma_N * a_n
    fitted_N = (a_r - exps.gamma_n) / a_n if a_n != 0 else math.nan
    return ScalingFit(exps, tuple(ns), tuple(risks), tuple(norms), a_r, a_n, fitted_n, fitted_N)
