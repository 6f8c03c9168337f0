"""Scenario assembly, the lifted problem matrices, and the SINR/rate and
power bookkeeping they feed."""
import numpy as np
import pytest

from dmswipt.array_channel import AngleErrorModel, ArrayConfig, steering_vector
from dmswipt.system_model import (
    BeamformingDesign,
    SystemParams,
    build_problem_matrices,
    build_scenario,
    dbm_to_watts,
    expected_sinr_eavesdropper,
    harvested_energy,
    relay_transmit_power,
    scale_to_power_budget,
    secrecy_rate_mc,
    sinr_destination,
    sinr_eavesdropper_exact,
    worst_case_secrecy_rate,
)

PARAMS = SystemParams(p_s=1.0, p_t=1.0, p_min=1e-3, rho=0.8, sigma2=1e-4, num_eves=2)


def _tiny_scenario(n, spread=np.deg2rad(6.0), perfect=False):
    array = ArrayConfig(num_antennas=n, element_spacing=0.5, wavelength=1.0)
    model = AngleErrorModel.from_ke(spread, 0.9)
    return build_scenario(
        array,
        model,
        np.deg2rad(-70.0),
        1.0 / 64.0,
        np.deg2rad(90.0),
        1.0 / 64.0,
        np.deg2rad(45.0),
        1.0 / 64.0,
        [np.deg2rad(60.0), np.deg2rad(110.0)],
        [1.0 / 64.0, 1.0 / 64.0],
        perfect_csi=perfect,
    )


def _random_design(n, rng, with_an=True):
    w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if with_an:
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        omega = b @ b.conj().T
    else:
        omega = np.zeros((n, n), dtype=np.complex128)
    return BeamformingDesign(W=w, Omega=omega)


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-12)
    assert dbm_to_watts(-10.0) == pytest.approx(1e-4, rel=1e-12)


def test_single_antenna_sinr_is_scalar_formula():
    scenario = _tiny_scenario(1)
    w = np.array([[0.3 - 0.2j]])
    omega = np.array([[0.05 + 0j]])
    design = BeamformingDesign(W=w, Omega=omega)
    hd = scenario.h_rd.entries[0]
    hs = scenario.h_sr.entries[0]
    num = PARAMS.p_s * abs(np.conj(hd) * w[0, 0] * hs) ** 2
    den = (
        PARAMS.sigma2 * abs(np.conj(hd) * w[0, 0]) ** 2
        + abs(hd) ** 2 * omega[0, 0].real
        + PARAMS.sigma2
    )
    assert sinr_destination(design, scenario, PARAMS) == pytest.approx(
        num / den, rel=1e-12
    )


def test_a1_is_rank_one_outer_product():
    scenario = _tiny_scenario(4)
    m = build_problem_matrices(scenario)
    np.testing.assert_allclose(m.A1, np.outer(m.a1, m.a1.conj()), atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_lifted_quadratic_forms_match_matrix_expressions(n):
    scenario = _tiny_scenario(n)
    m = build_problem_matrices(scenario)
    rng = np.random.default_rng(n)
    w_mat = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    w = w_mat.flatten(order="F")
    h_sr = scenario.h_sr.entries
    h_rd = scenario.h_rd.entries
    h_rp = scenario.h_rp.entries

    def quad(mat):
        return float(np.real(np.vdot(w, mat @ w)))

    assert quad(m.A1) == pytest.approx(
        abs(np.vdot(h_rd, w_mat @ h_sr)) ** 2, rel=1e-6
    )
    assert quad(m.A2) == pytest.approx(
        np.linalg.norm(w_mat.conj().T @ h_rd) ** 2, rel=1e-6
    )
    assert quad(m.C1) == pytest.approx(np.linalg.norm(w_mat @ h_sr) ** 2, rel=1e-6)
    assert quad(m.D1) == pytest.approx(abs(np.vdot(h_rp, w_mat @ h_sr)) ** 2, rel=1e-6)
    assert quad(m.D2) == pytest.approx(
        np.linalg.norm(w_mat.conj().T @ h_rp) ** 2, rel=1e-6
    )
    for idx, eve in enumerate(scenario.eaves):
        cov = eve.h_robust.matrix
        sig = w_mat @ h_sr
        assert quad(m.B1[idx]) == pytest.approx(
            float(np.real(np.vdot(sig, cov @ sig))), rel=1e-6
        )
        assert quad(m.B2[idx]) == pytest.approx(
            float(np.real(np.trace(w_mat.conj().T @ cov @ w_mat))), rel=1e-6
        )


def test_sinr_invariant_under_common_phase():
    scenario = _tiny_scenario(4)
    rng = np.random.default_rng(0)
    design = _random_design(4, rng)
    rotated = BeamformingDesign(W=np.exp(1j * 0.83) * design.W, Omega=design.Omega)
    assert sinr_destination(rotated, scenario, PARAMS) == pytest.approx(
        sinr_destination(design, scenario, PARAMS), rel=1e-12
    )
    assert expected_sinr_eavesdropper(rotated, scenario, PARAMS, 1) == pytest.approx(
        expected_sinr_eavesdropper(design, scenario, PARAMS, 1), rel=1e-12
    )


def test_sinr_decreases_with_artificial_noise():
    scenario = _tiny_scenario(4)
    rng = np.random.default_rng(1)
    design = _random_design(4, rng)
    louder = BeamformingDesign(W=design.W, Omega=4.0 * design.Omega)
    assert sinr_destination(louder, scenario, PARAMS) < sinr_destination(
        design, scenario, PARAMS
    )
    assert expected_sinr_eavesdropper(
        louder, scenario, PARAMS, 2
    ) < expected_sinr_eavesdropper(design, scenario, PARAMS, 2)


def test_expected_sinr_collapses_to_exact_for_tight_spread():
    scenario = _tiny_scenario(4, spread=1e-7)
    rng = np.random.default_rng(2)
    design = _random_design(4, rng)
    for m in (1, 2):
        eve = scenario.eaves[m - 1]
        exact = sinr_eavesdropper_exact(
            design, scenario, PARAMS, eve.theta_hat, eve.gain
        )
        assert expected_sinr_eavesdropper(design, scenario, PARAMS, m) == pytest.approx(
            exact, rel=1e-6
        )


def test_expected_sinr_index_out_of_range():
    scenario = _tiny_scenario(3)
    design = _random_design(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        expected_sinr_eavesdropper(design, scenario, PARAMS, 3)


def test_worst_case_rate_zero_design():
    scenario = _tiny_scenario(4)
    design = BeamformingDesign(
        W=np.zeros((4, 4), dtype=np.complex128),
        Omega=np.zeros((4, 4), dtype=np.complex128),
    )
    assert worst_case_secrecy_rate(design, scenario, PARAMS) == 0.0


def test_worst_case_rate_unclamped_can_go_negative():
    # a beam aimed straight at the first eavesdropper leaks more than it serves
    scenario = _tiny_scenario(4, spread=1e-7)
    h_e = steering_vector(
        scenario.array, scenario.eaves[0].theta_hat, scenario.eaves[0].gain
    ).entries
    w = np.outer(h_e, scenario.h_sr.entries.conj())
    design = BeamformingDesign(W=w, Omega=np.zeros((4, 4), dtype=np.complex128))
    assert worst_case_secrecy_rate(design, scenario, PARAMS, clamp=False) < 0.0
    assert worst_case_secrecy_rate(design, scenario, PARAMS) == 0.0


def test_secrecy_rate_mc_reproducible_and_near_analytic():
    scenario = _tiny_scenario(4, spread=1e-6)
    rng = np.random.default_rng(5)
    design = _random_design(4, rng)
    a = secrecy_rate_mc(design, scenario, PARAMS, 200, np.random.default_rng(42))
    b = secrecy_rate_mc(design, scenario, PARAMS, 200, np.random.default_rng(42))
    assert a == b
    analytic = worst_case_secrecy_rate(design, scenario, PARAMS)
    assert a == pytest.approx(analytic, rel=2e-2, abs=1e-4)


def test_power_and_harvest_linear_in_lift():
    scenario = _tiny_scenario(4)
    rng = np.random.default_rng(9)
    design = _random_design(4, rng)
    doubled = BeamformingDesign(W=np.sqrt(2.0) * design.W, Omega=2.0 * design.Omega)
    assert relay_transmit_power(doubled, scenario, PARAMS) == pytest.approx(
        2.0 * relay_transmit_power(design, scenario, PARAMS), rel=1e-12
    )
    assert harvested_energy(doubled, scenario, PARAMS) == pytest.approx(
        2.0 * harvested_energy(design, scenario, PARAMS), rel=1e-12
    )


def test_scale_to_power_budget_projects_exactly():
    scenario = _tiny_scenario(4)
    rng = np.random.default_rng(13)
    design = _random_design(4, rng)
    assert relay_transmit_power(design, scenario, PARAMS) > PARAMS.p_t
    scaled = scale_to_power_budget(design, scenario, PARAMS)
    assert relay_transmit_power(scaled, scenario, PARAMS) == pytest.approx(
        PARAMS.p_t, rel=1e-12
    )
    inside = BeamformingDesign(W=0.01 * design.W, Omega=1e-4 * design.Omega)
    assert scale_to_power_budget(inside, scenario, PARAMS) is inside


def test_perfect_csi_covariance_is_exact_outer_product():
    scenario = _tiny_scenario(6, perfect=True)
    for eve in scenario.eaves:
        h = steering_vector(scenario.array, eve.theta_true, eve.gain).entries
        np.testing.assert_allclose(
            eve.h_robust.matrix, np.outer(h, h.conj()), atol=1e-14
        )
