import math

import numpy as np
import pytest

from artifact.errors import DomainError
from artifact.spectral_model import (
    degrees_of_freedom, eigensum_T, eigensum_T_rate, isotropic, load_spectrum, make_finite,
    make_power_law, power_law_sum, quad_forms, resolvent_trace_sq, save_spectrum, spectral_sum,
)


def test_power_law_generator_matches_caption_exponents():
    m = make_power_law(1.5, 0.4, 0.01)
    assert np.allclose(m.eigenvalues(5), np.arange(1, 6) ** -1.5)
    assert np.allclose(m.target_coeffs(5), np.arange(1, 6) ** -1.1)
    m2 = make_power_law(2.0, 0.5, 0.0)
    assert np.allclose(m2.target_coeffs(4), np.arange(1, 5) ** -1.5)
    assert m2.noise_var == 0.0


@pytest.mark.parametrize("alpha", [1.0, 0.5, -2.0])
def test_capacity_condition_rejected(alpha):
    with pytest.raises(DomainError, match="capacity condition violated"):
        make_power_law(alpha, 0.4)


def test_bad_tail_tol_and_r():
    with pytest.raises(DomainError):
        make_power_law(2.0, 0.4, tail_tol=0.0)
    with pytest.raises(DomainError):
        make_power_law(2.0, 0.0)


def test_make_finite_validation():
    with pytest.raises(DomainError, match="length mismatch"):
        make_finite([1, 2], [0, 0, 0])
    with pytest.raises(DomainError):
        make_finite([1.0, 0.0], [1, 1])
    with pytest.raises(DomainError):
        make_finite([1.0, 2.0], [1, 1])


def test_isotropic_model():
    m = make_finite(np.ones(200), np.full(200, math.sqrt(1 / 200)), 0.04)
    assert m.rank == 200
    assert m.target_norm_sq() == pytest.approx(1.0, rel=1e-14)
    assert m.trace() == 200.0
    assert m.inverse_trace() == 200.0


def test_linear_experiment_model():
    k = np.arange(1, 1001, dtype=float)
    m = make_finite(k ** -1.0, k ** -1.5, 4e-4)
    assert m.trace() == pytest.approx(sum(1 / i for i in range(1, 1001)), rel=1e-14)
    assert m.target_norm_sq() == pytest.approx(sum(i ** -3.0 for i in range(1, 1001)), rel=1e-14)


def test_degrees_of_freedom_isotropic():
    df1, df2 = degrees_of_freedom(isotropic(100), 1.0)
    assert (df1, df2) == (50.0, 25.0)


def test_df1_integral_approximation_power_law():
    m = make_power_law(2.0, 0.5)
    nu = 1e-4
    c1 = math.pi / (2 * math.sin(math.pi / 2))
    df1, _ = degrees_of_freedom(m, nu)
    assert df1 == pytest.approx(c1 * nu ** -0.5, rel=0.02)


def test_df_decay_with_nu():
    m = make_power_law(1.5, 0.4)
    grid = np.geomspace(1e-3, 1e6, 25)
    vals = np.array([degrees_of_freedom(m, v) for v in grid])
    assert np.all(np.diff(vals[:, 0]) < 0) and np.all(np.diff(vals[:, 1]) < 0)
    assert vals[-1, 0] < 1e-5


def test_nu_must_be_positive():
    with pytest.raises(DomainError):
        degrees_of_freedom(isotropic(4), 0.0)
    with pytest.raises(DomainError):
        quad_forms(isotropic(4), -1.0)


def test_quad_forms_zero_target():
    m = make_finite(np.ones(5), np.zeros(5))
    q = quad_forms(m, 0.3)
    assert (q.q_inv1, q.q_lam_inv1, q.q_inv2, q.q_lam_inv2, q.q_lam2_inv2) == (0, 0, 0, 0, 0)


def test_quad_forms_isotropic_scalar_values():
    q = quad_forms(isotropic(10, 1.0), 3.0)
    assert q.q_inv1 == pytest.approx(0.25, rel=1e-15)
    assert q.q_lam_inv1 == pytest.approx(0.25, rel=1e-15)
    for v in (q.q_inv2, q.q_lam_inv2, q.q_lam2_inv2):
        assert v == pytest.approx(1 / 16, rel=1e-15)


def test_quad_forms_power_law_against_long_sum(brute):
    alpha, r, nu = 1.5, 0.4, 0.01
    q = quad_forms(make_power_law(alpha, r), nu)
    c0 = 1 + 2 * alpha * r
    expected = {
        "q_inv1": brute(c0, 1, nu, alpha),
        "q_lam_inv1": brute(c0 + alpha, 1, nu, alpha),
        "q_inv2": brute(c0, 2, nu, alpha),
        "q_lam_inv2": brute(c0 + alpha, 2, nu, alpha),
        "q_lam2_inv2": brute(c0 + 2 * alpha, 2, nu, alpha),
    }
    for name, ref in expected.items():
        assert getattr(q, name) == pytest.approx(ref, rel=1e-8), name


def test_quad_form_identity():
    for m in (make_power_law(1.5, 0.4), make_finite(np.geomspace(1, 1e-3, 50), np.linspace(1, 0, 50))):
        for nu in (1e-4, 0.1, 10.0):
            q = quad_forms(m, nu)
            assert q.q_lam_inv1 == pytest.approx(m.target_norm_sq() - nu * q.q_inv1, rel=1e-9)


def test_df_identity_finite():
    rng = np.random.default_rng(3)
    eig = np.sort(rng.uniform(0.01, 3, 80))[::-1]
    m = make_finite(eig, rng.normal(size=80))
    for nu in (1e-3, 0.5, 7.0):
        df1, df2 = degrees_of_freedom(m, nu)
        assert df1 - df2 == pytest.approx(nu * resolvent_trace_sq(m, nu), rel=1e-10)


def test_tail_control_head_doubling():
    alpha, tol = 2.0, 1e-8
    for c, g, nu in [(2.0, 1, 1e-4), (4.0, 2, 1e-6), (1.5, 2, 1e-3)]:
        auto = power_law_sum(c, g, nu, alpha, tol)
        for head in (1024, 2048, 4096):
            a = power_law_sum(c, g, nu, alpha, head=head)
            b = power_law_sum(c, g, nu, alpha, head=2 * head)
            assert abs(a - b) <= tol * abs(b)
        assert auto == pytest.approx(power_law_sum(c, g, nu, alpha, head=8192), rel=tol)


def test_divergent_sum_rejected():
    with pytest.raises(DomainError):
        power_law_sum(1.0, 1, 0.1, 2.0)


def test_T_functional_matches_quad_form():
    m = make_power_law(2.0, 0.3)
    nu = 1e-3
    t = eigensum_T(m, 1, 2 * 0.3, 1, nu)
    assert t == pytest.approx(quad_forms(m, nu).q_inv1, rel=1e-12)


def test_T_functional_df1_integral_approximation(brute):
    # the delta = 0, s = 0 sum diverges; delta = 1 is df1
    m = make_power_law(2.0, 0.5)
    nu = 1e-4
    t = eigensum_T(m, 0, 1.0, 1.0, nu)
    assert t == pytest.approx(brute(2.0, 1.0, nu, 2.0), rel=1e-8)
    assert t == pytest.approx(math.pi / 2 * nu ** -0.5, rel=0.02)
    with pytest.raises(DomainError):
        eigensum_T(m, 0, 0.0, 1.0, nu)


def test_T_functional_errors_and_decay():
    with pytest.raises(DomainError):
        eigensum_T(isotropic(3), 1, 0.5, 1, 0.1)
    m = make_power_law(2.0, 0.3)
    with pytest.raises(DomainError):
        eigensum_T(m, 1, 2.0, 1.0, 0.1)
    assert eigensum_T(m, 1, 0.5, 1, 1e8) < 1e-7


def test_T_rate_exponent():
    m = make_power_law(2.0, 0.25)
    rate = eigensum_T_rate(2.0, 1, 0.5, 1)  # (s - 1 + alpha(delta - gamma)) / alpha = -0.5
    assert rate == -0.5
    a, b = eigensum_T(m, 1, 0.5, 1, 1e-6), eigensum_T(m, 1, 0.5, 1, 1e-8)
    assert math.log(b / a) / math.log(1e-8 / 1e-6) == pytest.approx(rate, abs=0.02)


def test_spectrum_file_roundtrip(tmp_path):
    m = make_finite(np.array([1.0, 0.5, 1 / 3]), np.array([0.1, -0.2, 1e-17]), 0.04, kind="rfm")
    save_spectrum(m, tmp_path / "s.txt")
    text = (tmp_path / "s.txt").read_text()
    assert text.startswith("# spectral_model v1\n")
    back = load_spectrum(tmp_path / "s.txt")
    assert np.array_equal(back.eig, m.eig) and np.array_equal(back.coef, m.coef)
    assert back.noise_var == 0.04 and back.kind == "rfm"
    pl = make_power_law(1.5, 0.4, 0.01)
    save_spectrum(pl, tmp_path / "p.txt")
    assert "powerlaw alpha=1.5 r=0.4 sigma2=0.01" in (tmp_path / "p.txt").read_text()
    back = load_spectrum(tmp_path / "p.txt")
    assert (back.alpha, back.r, back.noise_var) == (1.5, 0.4, 0.01)


def test_spectrum_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n")
    with pytest.raises(DomainError, match="header"):
        load_spectrum(bad)
    bad.write_text("# spectral_model v1\n1 2 3\n")
    with pytest.raises(DomainError):
        load_spectrum(bad)


def test_truncation():
    m = make_power_law(2.0, 0.5, 0.1, kind="linear").truncated(10)
    assert m.rank == 10 and m.kind == "linear" and m.noise_var == 0.1
    with pytest.raises(DomainError):
        isotropic(5).truncated(6)
