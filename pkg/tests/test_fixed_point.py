import math

import numpy as np
import pytest

from artifact.errors import DomainError, ThresholdError
from artifact.fixed_point import (
    nu_residuals, solve_lambda_star, solve_nu_pair, solve_ridgeless_level, upsilon_chi,
)
from artifact.spectral_model import degrees_of_freedom, isotropic, make_finite, make_power_law


def closed_form(d, n, lam):
    return (d + lam - n + math.sqrt(4 * lam * n + (n - d - lam) ** 2)) / (2 * n)


def test_isotropic_closed_form_example():
    sol = solve_lambda_star(isotropic(100), 200, 50.0)
    assert sol.primal == pytest.approx(0.390388, abs=5e-7)
    assert sol.primal == pytest.approx(closed_form(100, 200, 50.0), rel=1e-11)
    assert sol.regime == "ridge" and sol.companion is None


def test_ridgeless_linear_branches():
    assert solve_lambda_star(isotropic(200), 100, 0.0).primal == pytest.approx(1.0, rel=1e-12)
    under = solve_lambda_star(isotropic(50), 100, 0.0)
    assert under.primal == 0.0 and under.regime == "under"
    with pytest.raises(ThresholdError):
        solve_lambda_star(isotropic(100), 100, 0.0)
    over = solve_lambda_star(make_power_law(2.0, 0.5, kind="linear"), 50, 0.0)
    assert over.regime == "over"
    assert degrees_of_freedom(make_power_law(2.0, 0.5), over.primal)[0] == pytest.approx(50, abs=1e-9)


def test_large_lambda_limit():
    m = make_power_law(1.5, 0.4, kind="linear")
    for lam in (1e6, 1e9):
        assert solve_lambda_star(m, 100, lam).primal * 100 / lam == pytest.approx(1.0, rel=1e-3)


def test_lambda_star_positive_and_residual():
    m = make_finite(np.geomspace(1, 1e-4, 300), np.ones(300))
    for lam in (1e-8, 1e-3, 1.0):
        sol = solve_lambda_star(m, 120, lam)
        assert sol.primal > 0 and sol.residual < 1e-8


def test_nu_pair_finite_rank_over():
    m = isotropic(200, kind="rfm")
    sol = solve_nu_pair(m, 50, 100, 0.0)
    assert sol.primal == pytest.approx(3.0, rel=1e-12)
    assert sol.companion == pytest.approx(1.5, rel=1e-12)
    assert max(abs(r) for r in nu_residuals(m, 50, 100, 0.0, sol.companion, sol.primal)) < 1e-10


def test_nu_pair_finite_rank_under():
    sol = solve_nu_pair(isotropic(200, kind="rfm"), 100, 50, 0.0)
    assert sol.primal == pytest.approx(3.0, rel=1e-12)
    assert sol.companion == 0.0 and sol.regime == "under"


def test_nu_pair_power_law_residuals():
    m = make_power_law(1.5, 0.4)
    sol = solve_nu_pair(m, 100, 300, 1e-3)
    e1, e2 = nu_residuals(m, 100, 300, 1e-3, sol.companion, sol.primal)
    assert max(abs(e1), abs(e2)) < 1e-10


def test_nu_pair_errors():
    m = isotropic(200, kind="rfm")
    with pytest.raises(ThresholdError):
        solve_nu_pair(m, 100, 100, 0.0)
    with pytest.raises(ThresholdError):
        solve_nu_pair(m, 10000, 10005, 0.0)
    with pytest.raises(DomainError):
        solve_nu_pair(m, 300, 250, 0.0)  # p beyond the rank in the lambda_p branch


@pytest.mark.parametrize("p", [50, 70, 130, 200])
def test_nu_pair_lambda_to_zero_consistency(p):
    m = make_power_law(1.5, 0.4)
    near = solve_nu_pair(m, 100, p, 1e-10).primal
    exact = solve_nu_pair(m, 100, p, 0.0).primal
    assert near == pytest.approx(exact, rel=1e-6)


def test_ridgeless_level_examples():
    assert solve_ridgeless_level(isotropic(500), 100) == pytest.approx(4.0, rel=1e-12)
    c1 = math.pi / (2 * math.sin(math.pi / 2))
    nu = solve_ridgeless_level(make_power_law(2.0, 0.5), 100)
    assert degrees_of_freedom(make_power_law(2.0, 0.5), nu)[0] == pytest.approx(100, abs=1e-10)
    assert nu == pytest.approx((100 / c1) ** -2, rel=0.05)
    with pytest.raises(DomainError):
        solve_ridgeless_level(isotropic(100), 100)


def test_upsilon_chi_hand_values():
    ups, chi = upsilon_chi(isotropic(200, kind="rfm"), 50, 100, 1.5, 3.0)
    assert ups == pytest.approx(4 / 7, rel=1e-14)
    assert chi == pytest.approx(1 / 7, rel=1e-14)


def test_upsilon_limits():
    m = make_power_law(1.5, 0.4)
    lam_p = solve_ridgeless_level(m, 40)
    ups, _ = upsilon_chi(m, 100, 40, 0.0, lam_p)
    assert ups == pytest.approx(40 / 100, rel=1e-14)
    ups, _ = upsilon_chi(m, 100, 200, 1e8, 1e8)
    assert ups < 1e-6


def test_upsilon_singular():
    with pytest.raises(DomainError):
        upsilon_chi(isotropic(200, kind="rfm"), 50, 10, 1.0, 1e-3)
