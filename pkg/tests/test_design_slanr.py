"""Pooled-leakage design: objective formula cross-checks, dominance of
the solver optimum over concrete feasible designs, and end-to-end
properties on the reference four-antenna scenario."""
from dataclasses import replace

import numpy as np
import pytest

from dmswipt.design_slanr import slanr_design, slanr_objective
from dmswipt.system_model import (
    BeamformingDesign,
    harvested_energy,
    relay_transmit_power,
    scale_to_power_budget,
)


def _kron_objective(design, scenario, params):
    """Same ratio assembled through the vectorized quadratic forms."""
    h_sr = scenario.h_sr.entries
    h_rd = scenario.h_rd.entries
    n = len(h_sr)
    w = design.W.flatten(order="F")
    a1 = np.kron(h_sr.conj(), h_rd)
    num = params.p_s * abs(np.vdot(a1, w)) ** 2
    left = np.outer(h_sr.conj(), h_sr)
    den = 0.0
    for eve in scenario.eaves:
        b1 = np.kron(left, eve.h_robust.matrix)
        den += params.p_s * float(np.real(np.vdot(w, b1 @ w)))
    den += float(np.real(np.vdot(h_rd, design.Omega @ h_rd)))
    a2 = np.kron(np.eye(n), np.outer(h_rd, h_rd.conj()))
    den += params.sigma2 * float(np.real(np.vdot(w, a2 @ w)))
    return num / (den + params.sigma2)


def test_zero_design_scores_zero(table_n4):
    scenario, params = table_n4
    n = scenario.array.num_antennas
    zero = BeamformingDesign(
        W=np.zeros((n, n), dtype=np.complex128),
        Omega=np.zeros((n, n), dtype=np.complex128),
    )
    assert slanr_objective(zero, scenario, params) == 0.0


def test_objective_agrees_with_kron_assembly(table_n4):
    scenario, params = table_n4
    rng = np.random.default_rng(12)
    n = scenario.array.num_antennas
    for _ in range(5):
        w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        design = BeamformingDesign(W=w, Omega=0.01 * (b @ b.conj().T))
        direct = slanr_objective(design, scenario, params)
        assert direct == pytest.approx(
            _kron_objective(design, scenario, params), rel=1e-10
        )


def test_optimum_dominates_other_feasible_designs(
    table_n4, slanr_n4, srm1d_n4, sca_n4, zf_n4
):
    scenario, params = table_n4
    bound = slanr_n4.objective_value * (1 + 1e-6) + 1e-9
    for other in (srm1d_n4.design, sca_n4.design, zf_n4.design):
        assert slanr_objective(other, scenario, params) <= bound


def test_optimum_dominates_random_feasible_designs(scenario_factory):
    scenario, params = scenario_factory(21, 4)
    # unsteered designs harvest microwatts; drop the floor so they count
    params = replace(params, p_min=1e-7)
    result = slanr_design(scenario, params)
    rng = np.random.default_rng(22)
    bound = result.objective_value * (1 + 1e-6) + 1e-9
    checked = 0
    for _ in range(40):
        w = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        design = BeamformingDesign(
            W=np.sqrt(params.p_t) * w / np.linalg.norm(w),
            Omega=np.zeros((4, 4), dtype=np.complex128),
        )
        design = scale_to_power_budget(design, scenario, params)
        if harvested_energy(design, scenario, params) < params.p_min:
            continue
        checked += 1
        assert slanr_objective(design, scenario, params) <= bound
    assert checked >= 5


def test_design_is_feasible_and_extracted(table_n4, slanr_n4):
    scenario, params = table_n4
    design = slanr_n4.design
    assert relay_transmit_power(design, scenario, params) <= params.p_t * (1 + 1e-6)
    assert harvested_energy(design, scenario, params) >= params.p_min * (1 - 1e-6)
    assert slanr_n4.rank_ratio <= 1e-4
    achieved = slanr_objective(design, scenario, params)
    assert achieved <= slanr_n4.objective_value * (1 + 1e-4)
    assert achieved >= 0.5 * slanr_n4.objective_value


def test_rate_does_not_beat_dedicated_search(slanr_n4, srm1d_n4):
    assert slanr_n4.rate <= srm1d_n4.rate + 1e-3
    assert slanr_n4.rate >= 0.0
