import numpy as np
import pytest

import artifact.rfm_theory as rt
from artifact.errors import DomainError, ThresholdError
from artifact.fixed_point import solve_ridgeless_level
from artifact.rfm_theory import (
    norm_rfm, norm_rfm_minnorm, rfm_equivalents, risk_rfm, risk_rfm_minnorm,
)
from artifact.spectral_model import isotropic, make_finite, make_power_law, quad_forms, spectral_sum

S2 = 0.04


def iso(noise=S2):
    return isotropic(200, 1.0, noise, kind="rfm")


def fig_model():
    return make_power_law(1.5, 0.4, 0.01)


def test_zero_target_bias():
    m = make_finite(np.geomspace(1, 1e-3, 300), np.zeros(300), 0.1, kind="rfm")
    assert risk_rfm(m, 50, 80, 1e-3).bias == 0.0
    assert risk_rfm_minnorm(m, 100, 40).bias == 0.0
    assert risk_rfm_minnorm(m, 100, 40).variance == pytest.approx(0.1 * 40 / 60)


def test_zero_noise_variance():
    m = make_power_law(1.5, 0.4, 0.0)
    assert norm_rfm(m, 100, 150, 1e-3).variance == 0.0
    assert risk_rfm(m, 100, 150, 1e-3).variance == 0.0


def test_isotropic_hand_oracle_ridgeless_and_ridge():
    r, nn = risk_rfm_minnorm(iso(), 50, 100), norm_rfm_minnorm(iso(), 50, 100)
    assert r.variance == pytest.approx(4 / 3 * S2, rel=1e-12)
    assert nn.variance == pytest.approx(2 / 3 * S2, rel=1e-12)
    assert nn.bias == pytest.approx(0.5, rel=1e-12)
    parts = rfm_equivalents(iso(), 50, 100, 1e-12)
    assert parts.upsilon == pytest.approx(4 / 7, rel=1e-9)
    assert parts.chi == pytest.approx(1 / 7, rel=1e-9)
    assert parts.risk.variance == pytest.approx(4 / 3 * S2, rel=1e-9)
    assert parts.norm.variance == pytest.approx(2 / 3 * S2, rel=1e-9)
    assert parts.norm.bias == pytest.approx(0.5, rel=1e-9)


def test_shared_computation_path():
    m = fig_model()
    parts = rfm_equivalents(m, 100, 150, 1e-3)
    assert parts.risk == risk_rfm(m, 100, 150, 1e-3)
    assert parts.norm == norm_rfm(m, 100, 150, 1e-3)
    scale = 150 * parts.chi / 100
    assert parts.norm.variance == scale / parts.upsilon * parts.risk.variance
    assert parts.norm.bias == 150 * quad_forms(m, parts.nu2).q_lam_inv2 / (150 - parts.df2) + scale * parts.risk.bias


def test_minnorm_over_proportionality():
    m = fig_model()
    ratios = [norm_rfm_minnorm(m, 100, p).bias / norm_rfm_minnorm(m, 100, p).variance
              for p in (150, 300, 600, 1200)]
    assert np.allclose(ratios, ratios[0], rtol=1e-13)
    lam_n = solve_ridgeless_level(m, 100)
    assert ratios[0] == pytest.approx(quad_forms(m, lam_n).q_inv1 * lam_n / m.noise_var, rel=1e-12)


def test_rank_pole_in_under_branch():
    v_far = norm_rfm_minnorm(iso(), 400, 100).variance
    v_near = norm_rfm_minnorm(iso(), 400, 199).variance
    assert v_near > 50 * v_far
    with pytest.raises(DomainError):
        norm_rfm_minnorm(iso(), 400, 200)


def test_threshold_errors():
    with pytest.raises(ThresholdError):
        risk_rfm_minnorm(fig_model(), 100, 100)
    with pytest.raises(ThresholdError):
        norm_rfm_minnorm(fig_model(), 1000, 1000)


def test_unstable_upsilon_is_an_error(monkeypatch):
    monkeypatch.setattr(rt, "upsilon_chi", lambda *a: (1.0, 0.1))
    with pytest.raises(DomainError, match="n=100, p=150"):
        risk_rfm(fig_model(), 100, 150, 1e-3)


@pytest.mark.parametrize("p", [30, 60, 80, 120, 150, 300])
def test_regime_continuity_risk(p):
    m = fig_model()
    parts = rfm_equivalents(m, 100, p, 1e-8)
    mn = risk_rfm_minnorm(m, 100, p)
    assert parts.risk.bias == pytest.approx(mn.bias, rel=1e-3)
    assert parts.risk.variance == pytest.approx(mn.variance, rel=1e-3)


@pytest.mark.parametrize("p", [120, 150, 300])
def test_regime_continuity_norm_over(p):
    m = fig_model()
    parts = rfm_equivalents(m, 100, p, 1e-8)
    mn = norm_rfm_minnorm(m, 100, p)
    assert parts.norm.bias == pytest.approx(mn.bias, rel=1e-3)
    assert parts.norm.variance == pytest.approx(mn.variance, rel=1e-3)


@pytest.mark.parametrize("p", [30, 60, 80])
def test_regime_continuity_norm_under(p):
    # the ridge limit carries p - df2 in the first bias term; the default keeps n - df2
    m = fig_model()
    parts = rfm_equivalents(m, 100, p, 1e-8)
    limit = norm_rfm_minnorm(m, 100, p, ridge_limit=True)
    assert parts.norm.bias == pytest.approx(limit.bias, rel=1e-3)
    assert parts.norm.variance == pytest.approx(limit.variance, rel=1e-3)
    default = norm_rfm_minnorm(m, 100, p)
    assert default.variance == limit.variance
    assert default.bias < limit.bias


def test_default_under_bias_uses_n_minus_df2():
    m = fig_model()
    lam_p = solve_ridgeless_level(m, 30)
    q = quad_forms(m, lam_p)
    df2 = spectral_sum(m, lam_p, 2, 2)
    expected = 30 * q.q_lam_inv2 / (100 - df2) + 30 * q.q_inv1 / 70
    assert norm_rfm_minnorm(m, 100, 30).bias == pytest.approx(expected, rel=1e-14)


def test_variance_peaks_at_threshold():
    m = fig_model()
    ps = [20, 50, 90, 110, 200, 500]
    v = [risk_rfm_minnorm(m, 100, p).variance for p in ps]
    assert min(v[2], v[3]) > max(v[0], v[-1])
    for p in (89, 111):
        assert risk_rfm(m, 100, p, 1e-8).variance > risk_rfm(m, 100, 500, 1e-8).variance
