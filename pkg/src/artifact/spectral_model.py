"""Population spectra, target coefficients and the trace functionals built on them.

A model is either an explicit finite spectrum or a power law
``lambda_k = k^-alpha``, ``theta_k = k^-(1 + 2 alpha r)/2``.  Every functional the
deterministic equivalents need has the form

    sum_k  w_k * lambda_k^a / (lambda_k + nu)^g,      w_k in {1, theta_k^2}

Finite models are summed exactly with compensated summation.  Power-law sums are
split into an exact head and an Euler-Maclaurin tail whose integral is evaluated
in closed form far out and by Gauss-Legendre quadrature (in log k) across the
crossover ``lambda_k ~ nu``.  The head grows until an analytic bound on the
Euler-Maclaurin remainder drops below ``tail_tol`` relative to the sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .errors import DomainError

KINDS = ("linear", "rfm")

_HEAD_START = 256
_HEAD_MAX = 1 << 16
_GL_ORDER = 20
_FAR_RATIO = 0.05  # lambda_k / nu below which the binomial tail series is used
_EM3 = 2.0 * special.zeta(3.0) / (2.0 * math.pi) ** 3


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Eigenvalues of the covariance plus target coefficients in its eigenbasis.

    Use :func:`make_power_law` or :func:`make_finite` rather than the constructor.
    """

    kind: str
    noise_var: float
    alpha: float | None = None
    r: float | None = None
    tail_tol: float = 1e-8
    eig: np.ndarray | None = None
    coef: np.ndarray | None = None

    @property
    def is_power_law(self) -> bool:
        return self.eig is None

    @property
    def rank(self) -> float:
        return math.inf if self.is_power_law else int(self.eig.size)

    def eigenvalues(self, count: int | None = None) -> np.ndarray:
        if self.is_power_law:
            if count is None:
                raise DomainError("a power-law spectrum is infinite; pass a count")
            return np.arange(1, count + 1, dtype=float) ** -self.alpha
        return self.eig if count is None else self.eig[:count]

    def target_coeffs(self, count: int | None = None) -> np.ndarray:
        if self.is_power_law:
            if count is None:
                raise DomainError("a power-law target is infinite; pass a count")
            return np.arange(1, count + 1, dtype=float) ** (-(1.0 + 2.0 * self.alpha * self.r) / 2.0)
        return self.coef if count is None else self.coef[:count]

    def truncated(self, count: int) -> SpectralModel:
        """Finite model holding the leading ``count`` modes."""
        if count < 1:
            raise DomainError("truncation length must be positive")
        if not self.is_power_law and count > self.rank:
            raise DomainError(f"cannot truncate a rank-{self.rank} model to {count} modes")
        return make_finite(self.eigenvalues(count).copy(), self.target_coeffs(count).copy(),
                           self.noise_var, kind=self.kind)

    def with_noise(self, noise_var: float) -> SpectralModel:
        if self.is_power_law:
            return make_power_law(self.alpha, self.r, noise_var, self.tail_tol, kind=self.kind)
        return make_finite(self.eig, self.coef, noise_var, kind=self.kind)

    def trace(self) -> float:
        """Tr(Sigma) or Tr(Lambda)."""
        return spectral_sum(self, 0.0, power=1, order=0)

    def target_norm_sq(self) -> float:
        return spectral_sum(self, 0.0, power=0, order=0, weighted=True)

    def inverse_trace(self) -> float:
        """Tr(Sigma^-1); infinite for power laws."""
        if self.is_power_law:
            return math.inf
        return math.fsum((1.0 / self.eig).tolist())

    def __repr__(self) -> str:
        if self.is_power_law:
            return (f"SpectralModel(kind={self.kind!r}, powerlaw alpha={self.alpha:g}, "
                    f"r={self.r:g}, sigma2={self.noise_var:g})")
        return f"SpectralModel(kind={self.kind!r}, rank={self.rank}, sigma2={self.noise_var:g})"


@dataclass(frozen=True)
class QuadForms:
    """The five quadratic forms <theta, Lambda^a (Lambda + nu)^-g theta>."""

    q_inv1: float
    q_lam_inv1: float
    q_inv2: float
    q_lam_inv2: float
    q_lam2_inv2: float


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")


def make_power_law(alpha: float, r: float, noise_var: float = 0.0, tail_tol: float = 1e-8,
                   kind: str = "rfm") -> SpectralModel:
    """Power-law model: lambda_k = k^-alpha and theta_k = k^-(1 + 2 alpha r)/2."""
    _check_kind(kind)
    if not alpha > 1.0:
        raise DomainError(f"capacity condition violated: need alpha > 1 for a summable "
                          f"spectrum, got alpha={alpha}")
    if not r > 0.0:
        raise DomainError(f"source condition needs r > 0, got r={r}")
    if not 0.0 < tail_tol < 1.0:
        raise DomainError("tail_tol must lie in (0, 1)")
    if not noise_var >= 0.0:
        raise DomainError("noise variance must be non-negative")
    return SpectralModel(kind=kind, noise_var=float(noise_var), alpha=float(alpha),
                         r=float(r), tail_tol=float(tail_tol))


def make_finite(eigenvalues, target_coeffs, noise_var: float = 0.0,
                kind: str = "linear") -> SpectralModel:
    """Explicit finite spectrum.  Eigenvalues must be positive and non-increasing."""
    _check_kind(kind)
    eig = np.array(eigenvalues, dtype=float).ravel()
    coef = np.array(target_coeffs, dtype=float).ravel()
    if eig.size != coef.size:
        raise DomainError(f"length mismatch: {eig.size} eigenvalues vs {coef.size} coefficients")
    if eig.size == 0:
        raise DomainError("empty spectrum")
    if not np.all(np.isfinite(eig)) or not np.all(np.isfinite(coef)):
        raise DomainError("spectrum and coefficients must be finite")
    if np.any(eig <= 0.0):
        raise DomainError("eigenvalues must be strictly positive")
    if np.any(np.diff(eig) > 0.0):
        raise DomainError("eigenvalues must be non-increasing")
    if not noise_var >= 0.0:
        raise DomainError("noise variance must be non-negative")
    eig.setflags(write=False)
    coef.setflags(write=False)
    return SpectralModel(kind=kind, noise_var=float(noise_var), eig=eig, coef=coef)


def isotropic(rank: int, target_norm_sq: float = 1.0, noise_var: float = 0.0,
              kind: str = "linear") -> SpectralModel:
    """Identity covariance of the given rank with a flat target of the given squared norm."""
    coef = np.full(rank, math.sqrt(target_norm_sq / rank))
    return make_finite(np.ones(rank), coef, noise_var, kind=kind)


# --------------------------------------------------------------------------- sums


@lru_cache(maxsize=8)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


@lru_cache(maxsize=256)
def _head_powers(exponent: float, head: int) -> np.ndarray:
    out = np.arange(1, head, dtype=float) ** -exponent
    out.setflags(write=False)
    return out


def _far_integral(c: float, gamma: float, nu: float, alpha: float, x: float) -> float:
    """Closed-form series for  int_x^inf t^-c (t^-alpha + nu)^-gamma dt  when x^-alpha << nu."""
    rho = x ** -alpha / nu
    coeff = 1.0
    terms = []
    for j in range(200):
        term = coeff * rho ** j / (c - 1.0 + alpha * j)
        terms.append(term)
        if j > 0 and abs(term) < 1e-18 * abs(terms[0]):
            break
        coeff *= -(gamma + j) / (j + 1)
    return nu ** -gamma * x ** (1.0 - c) * math.fsum(terms)


def _mid_integral(c: float, gamma: float, nu: float, alpha: float, a: float, b: float) -> float:
    """int_a^b t^-c (t^-alpha + nu)^-gamma dt by panelled Gauss-Legendre in log t."""
    if b <= a:
        return 0.0
    lo, hi = math.log(a), math.log(b)
    width = 0.5 * min(1.0, 3.0 / alpha)
    panels = max(1, math.ceil((hi - lo) / width))
    nodes, weights = _gauss_legendre(_GL_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    vals = np.exp((1.0 - c) * u) * (np.exp(-alpha * u) + nu) ** -gamma
    return math.fsum((w * vals).tolist())


def _powerlaw_pieces(c: float, gamma: float, nu: float, alpha: float, head: int):
    """Return (sum estimate, remainder bound) for a fixed head length."""
    ks = _head_powers(c, head)
    lam = _head_powers(alpha, head)
    head_sum = math.fsum((ks * (lam + nu) ** -gamma).tolist())

    a = float(head)
    g_a = a ** -c * (a ** -alpha + nu) ** -gamma
    dlog = -c / a + gamma * alpha * a ** (-alpha - 1.0) / (a ** -alpha + nu)
    x_far = max(a, (_FAR_RATIO * nu) ** (-1.0 / alpha))
    integral = _mid_integral(c, gamma, nu, alpha, a, x_far) + _far_integral(c, gamma, nu, alpha, x_far)
    tail = integral + 0.5 * g_a - g_a * dlog / 12.0
    m = c + alpha * abs(gamma)
    bound = _EM3 * m * (m + 1.0) * (m + 2.0) * integral / a ** 3
    return head_sum + tail, bound


def power_law_sum(c: float, gamma: float, nu: float, alpha: float, tail_tol: float = 1e-8,
                  head: int | None = None) -> float:
    """sum_{k>=1} k^-c (k^-alpha + nu)^-gamma for c > 1.

    With ``head=None`` the exact head is doubled until the remainder bound is below
    ``tail_tol`` relative; passing ``head`` pins it (used to test tail control).
    """
    if not c > 1.0:
        raise DomainError(f"eigensum diverges: decay exponent {c:g} must exceed 1")
    if gamma == 0.0:
        return float(special.zeta(c))
    if not nu > 0.0:
        raise DomainError("nu must be positive")
    if head is not None:
        return _powerlaw_pieces(c, gamma, nu, alpha, head)[0]
    size = _HEAD_START
    while True:
        total, bound = _powerlaw_pieces(c, gamma, nu, alpha, size)
        if bound <= tail_tol * abs(total) or size >= _HEAD_MAX:
            return total
        size *= 2


def spectral_sum(model: SpectralModel, nu: float, power: float, order: float,
                 weighted: bool = False) -> float:
    """sum_k w_k lambda_k^power / (lambda_k + nu)^order with w_k = theta_k^2 if weighted."""
    if model.is_power_law:
        c = power * model.alpha + (1.0 + 2.0 * model.alpha * model.r if weighted else 0.0)
        return power_law_sum(c, order, nu, model.alpha, model.tail_tol)
    lam = model.eig
    terms = lam ** power
    if order:
        terms = terms / (lam + nu) ** order
    if weighted:
        terms = terms * model.coef ** 2
    return math.fsum(terms.tolist())


def _require_nu(nu: float) -> None:
    if not nu > 0.0:
        raise DomainError(f"nu must be positive, got {nu}")


def degrees_of_freedom(model: SpectralModel, nu: float) -> tuple[float, float]:
    """(df1, df2) = (Tr(L(L+nu)^-1), Tr(L^2(L+nu)^-2))."""
    _require_nu(nu)
    return spectral_sum(model, nu, 1, 1), spectral_sum(model, nu, 2, 2)


def resolvent_trace_sq(model: SpectralModel, nu: float) -> float:
    """Tr(L (L+nu)^-2), the trace shared by chi and the norm variance."""
    _require_nu(nu)
    return spectral_sum(model, nu, 1, 2)


def quad_forms(model: SpectralModel, nu: float) -> QuadForms:
    _require_nu(nu)
    return QuadForms(
        q_inv1=spectral_sum(model, nu, 0, 1, weighted=True),
        q_lam_inv1=spectral_sum(model, nu, 1, 1, weighted=True),
        q_inv2=spectral_sum(model, nu, 0, 2, weighted=True),
        q_lam_inv2=spectral_sum(model, nu, 1, 2, weighted=True),
        q_lam2_inv2=spectral_sum(model, nu, 2, 2, weighted=True),
    )


def eigensum_T(model: SpectralModel, s: int, delta: float, gamma_exp: float, nu: float) -> float:
    """T^s_{delta,gamma}(nu) = sum_k k^(-s - delta alpha) / (k^-alpha + nu)^gamma."""
    if not model.is_power_law:
        raise DomainError("the T functional is defined for power-law models only")
    if s not in (0, 1):
        raise DomainError("s must be 0 or 1")
    if not 0.0 <= delta <= gamma_exp:
        raise DomainError("need 0 <= delta <= gamma")
    _require_nu(nu)
    return power_law_sum(s + delta * model.alpha, gamma_exp, nu, model.alpha, model.tail_tol)


def eigensum_T_rate(alpha: float, s: int, delta: float, gamma_exp: float) -> float:
    """Exponent e with T^s_{delta,gamma}(nu) = O(nu^e) as nu -> 0."""
    return min((s - 1.0 + alpha * (delta - gamma_exp)) / alpha, 0.0)


# --------------------------------------------------------------------------- file format

_HEADER = "# spectral_model v1"


def save_spectrum(model: SpectralModel, path) -> None:
    lines = [_HEADER, f"# kind={model.kind}"]
    if model.is_power_law:
        lines.append(f"powerlaw alpha={model.alpha!r} r={model.r!r} sigma2={model.noise_var!r}")
    else:
        lines.append(f"# sigma2={model.noise_var!r}")
        lines.extend(f"{e:.17g} {c:.17g}" for e, c in zip(model.eig, model.coef))
    Path(path).write_text("\n".join(lines) + "\n")


def load_spectrum(path, kind: str | None = None, noise_var: float | None = None) -> SpectralModel:
    """Read a spectrum file; ``kind``/``noise_var`` override values stored in it."""
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != _HEADER:
        raise DomainError(f"{path}: missing '{_HEADER}' header")
    meta: dict[str, str] = {}
    pairs = []
    for lineno, raw in enumerate(text[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = val.strip()
            continue
        if line.startswith("powerlaw"):
            fields = dict(tok.split("=", 1) for tok in line.split()[1:])
            try:
                alpha, r, s2 = float(fields["alpha"]), float(fields["r"]), float(fields["sigma2"])
            except (KeyError, ValueError) as exc:
                raise DomainError(f"{path}:{lineno}: bad powerlaw line") from exc
            return make_power_law(alpha, r, s2 if noise_var is None else noise_var,
                                  kind=kind or meta.get("kind", "rfm"))
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"{path}:{lineno}: expected two columns")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: non-numeric entry") from exc
    if not pairs:
        raise DomainError(f"{path}: no spectrum entries")
    eig, coef = zip(*pairs)
    s2 = float(meta.get("sigma2", 0.0)) if noise_var is None else noise_var
    return make_finite(eig, coef, s2, kind=kind or meta.get("kind", "linear"))
