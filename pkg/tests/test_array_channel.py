"""Steering vectors, the truncated-Gaussian error model, and the robust
eavesdropper covariance (analytic vs Monte Carlo)."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import erf, erfinv
from scipy.stats import chi2

from dmswipt.array_channel import (
    AngleErrorModel,
    ArrayConfig,
    path_loss,
    robust_covariance_analytic,
    robust_covariance_mc,
    sample_angle_error,
    sigma_from_ke,
    steering_vector,
    truncated_gaussian_pdf,
)

ARRAY6 = ArrayConfig(num_antennas=6, element_spacing=0.5, wavelength=1.0)
MODEL6 = AngleErrorModel.from_ke(np.deg2rad(6.0), 0.9)


def test_steering_vector_matches_direct_formula():
    theta, g = 0.7, 0.02
    sv = steering_vector(ARRAY6, theta, g)
    n = ARRAY6.num_antennas
    phase = (
        2.0
        * np.pi
        * (ARRAY6.element_spacing / ARRAY6.wavelength)
        * np.cos(theta)
        * (np.arange(n) - (n - 1) / 2.0)
    )
    expected = np.sqrt(g / n) * np.exp(-1j * phase)
    np.testing.assert_allclose(sv.entries, expected, rtol=0, atol=1e-14)


def test_steering_vector_frozen_first_entry():
    sv = steering_vector(ARRAY6, np.pi / 3, 1.0 / 64.0)
    assert sv.entries[0] == pytest.approx(
        -0.03608439182435159 - 0.036084391824351636j, abs=1e-15
    )


@given(
    theta=st.floats(0.0, np.pi),
    gain=st.floats(1e-4, 1.0),
    n=st.integers(1, 12),
)
@settings(max_examples=40, deadline=None)
def test_steering_vector_norm_carries_gain(theta, gain, n):
    array = ArrayConfig(num_antennas=n, element_spacing=0.5, wavelength=1.0)
    sv = steering_vector(array, theta, gain)
    assert np.linalg.norm(sv.entries) ** 2 == pytest.approx(gain, rel=1e-12)


def test_path_loss_reference_and_square_law():
    assert path_loss(10.0, 10.0) == pytest.approx(1.0)
    assert path_loss(80.0, 10.0) == pytest.approx(1.0 / 64.0)
    assert path_loss(20.0, 10.0) == pytest.approx(0.25)


def test_pdf_frozen_value_and_normalization():
    assert truncated_gaussian_pdf(0.0, MODEL6) == pytest.approx(
        6.962515823631063, rel=1e-12
    )
    total, _ = quad(
        lambda x: truncated_gaussian_pdf(x, MODEL6),
        -MODEL6.delta_theta_max,
        MODEL6.delta_theta_max,
    )
    assert total == pytest.approx(1.0, abs=1e-8)


def test_pdf_vanishes_outside_support():
    edge = MODEL6.delta_theta_max
    assert truncated_gaussian_pdf(edge * 1.0001, MODEL6) == 0.0
    assert truncated_gaussian_pdf(-edge * 1.0001, MODEL6) == 0.0


def test_sigma_from_ke_frozen_and_erfinv_oracle():
    val = sigma_from_ke(np.deg2rad(6.0), 0.9)
    assert val == pytest.approx(0.06366509056142469, rel=1e-10)
    # K_e = erf(dmax / (sigma sqrt(2))) inverts in closed form
    oracle = np.deg2rad(6.0) / (np.sqrt(2.0) * erfinv(0.9))
    assert val == pytest.approx(oracle, rel=1e-9)


def test_ke_roundtrip_through_quadrature():
    sigma = MODEL6.sigma_theta
    dmax = MODEL6.delta_theta_max
    mass, _ = quad(
        lambda x: np.exp(-(x**2) / (2 * sigma**2)) / (np.sqrt(2 * np.pi) * sigma),
        -dmax,
        dmax,
    )
    assert mass == pytest.approx(0.9, abs=1e-9)


def test_sample_angle_error_support_and_moments():
    rng = np.random.default_rng(7)
    draws = sample_angle_error(MODEL6, rng, size=100000)
    assert draws.shape == (100000,)
    assert np.all(np.abs(draws) <= MODEL6.delta_theta_max)
    assert abs(np.mean(draws)) < 5e-4
    # truncated second moment: sigma^2 (1 - 2 a phi(a) / K_e), a = dmax/sigma
    a = MODEL6.delta_theta_max / MODEL6.sigma_theta
    phi_a = np.exp(-(a**2) / 2) / np.sqrt(2 * np.pi)
    second = MODEL6.sigma_theta**2 * (1.0 - 2.0 * a * phi_a / MODEL6.k_e)
    assert np.var(draws) == pytest.approx(second, rel=0.02)


def test_sample_angle_error_distribution_gof():
    rng = np.random.default_rng(11)
    draws = sample_angle_error(MODEL6, rng, size=100000)
    bins = 20
    # equal-probability bin edges from the model CDF
    sigma = MODEL6.sigma_theta
    grid = np.linspace(0, 1, bins + 1)
    edges = sigma * np.sqrt(2.0) * erfinv(
        (2.0 * grid - 1.0) * erf(MODEL6.delta_theta_max / (sigma * np.sqrt(2.0)))
    )
    counts, _ = np.histogram(draws, bins=edges)
    expected = len(draws) / bins
    stat = np.sum((counts - expected) ** 2 / expected)
    assert stat < chi2.ppf(0.99, bins - 1)


def test_gaussian_moment_identity():
    # int_0^x t^2 e^{-q^2 t^2} dt = sqrt(pi)/(4 q^3) erf(qx) - x/(2 q^2) e^{-q^2 x^2}
    for q in (1.0, 5.0, 15.7):
        for x in (0.05, 0.1):
            numeric, _ = quad(lambda t: t**2 * np.exp(-(q * t) ** 2), 0.0, x)
            closed = (np.sqrt(np.pi) / (4 * q**3)) * erf(q * x) - (
                x / (2 * q**2)
            ) * np.exp(-((q * x) ** 2))
            assert numeric == pytest.approx(closed, rel=1e-9)


def test_covariance_collapses_to_outer_product_as_spread_vanishes():
    tight = AngleErrorModel.from_ke(1e-7, 0.9)
    theta, g = np.deg2rad(60.0), 1.0 / 64.0
    cov = robust_covariance_analytic(ARRAY6, theta, g, tight).matrix
    h = steering_vector(ARRAY6, theta, g).entries
    np.testing.assert_allclose(cov, np.outer(h, h.conj()), atol=1e-6 * g)


def test_covariance_diagonal_is_exact():
    cov = robust_covariance_analytic(ARRAY6, np.deg2rad(60.0), 1.0 / 64.0, MODEL6)
    np.testing.assert_allclose(
        np.diag(cov.matrix).real, np.full(6, 1.0 / 64.0 / 6.0), rtol=1e-12
    )
    assert np.allclose(cov.matrix, cov.matrix.conj().T)


def test_covariance_warns_on_wide_spread():
    wide = AngleErrorModel.from_ke(np.deg2rad(14.0), 0.9)
    with pytest.warns(RuntimeWarning):
        robust_covariance_analytic(ARRAY6, np.deg2rad(60.0), 1.0, wide)


def test_covariance_analytic_close_to_sampling():
    rng = np.random.default_rng(3)
    theta, g = np.deg2rad(110.0), 1.0 / 64.0
    analytic = robust_covariance_analytic(ARRAY6, theta, g, MODEL6).matrix
    sampled = robust_covariance_mc(ARRAY6, theta, g, MODEL6, 100000, rng).matrix
    rel = np.linalg.norm(sampled - analytic) / np.linalg.norm(analytic)
    assert rel < 0.04


def test_covariance_mc_degenerate_rng_hits_shifted_outer_product():
    class HalfRng:
        """Deterministic stand-in: every uniform draw sits at the median."""

        def uniform(self, low=0.0, high=1.0, size=None):
            mid = 0.5 * (low + high)
            if size is None:
                return mid
            return np.full(size, mid)

        def random(self, size=None):
            return 0.5 if size is None else np.full(size, 0.5)

    theta, g = np.deg2rad(60.0), 1.0
    cov = robust_covariance_mc(ARRAY6, theta, g, MODEL6, 64, HalfRng()).matrix
    h = steering_vector(ARRAY6, theta, g).entries
    np.testing.assert_allclose(cov, np.outer(h, h.conj()), atol=1e-12)
