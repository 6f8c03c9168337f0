"""Secrecy leakage-and-noise ratio maximization in a single SDP.

Instead of the exact worst-case rate, this design maximizes the ratio of
the destination's signal power to the sum of all eavesdroppers' expected
signal powers plus the total noise seen at the destination.  Pooling the
leakage into the denominator removes the per-eavesdropper coupling, so
after the Charnes-Cooper change of variables one SDP solve suffices;
there is no outer search and no iteration, which is the entire appeal of
this scheme.  The price is a small, bounded rate loss relative to the
one-dimensional search.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import DesignInfeasibleError, RankRepairError, SolverFailureError
from .conic_core import (
    ConicProgram,
    LinearFunc,
    MatrixVar,
    ScalarVar,
    SolverOptions,
    charnes_cooper_recover,
    eq,
    ge,
    le,
    psd_clamp,
    rank_one_extract,
    solve,
    solve_with_margins,
)
from .system_model import (
    BeamformingDesign,
    Scenario,
    SystemParams,
    _check_pair,
    build_problem_matrices,
    normalize_noise,
    scale_to_power_budget,
    worst_case_secrecy_rate,
)

__all__ = ["SlanrOptions", "SlanrResult", "slanr_objective", "slanr_design"]

_REPAIR_MARGINS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


@dataclass(frozen=True)
class SlanrOptions:
    rank_threshold: float = 1e-4
    solver: SolverOptions = field(
        default_factory=lambda: SolverOptions(backends=("clarabel", "scs"))
    )


@dataclass(frozen=True)
class SlanrResult:
    """Design, its worst-case secrecy rate, and solve bookkeeping.

    ``objective_value`` is the maximized leakage-and-noise ratio itself,
    which upper-bounds none of the per-eavesdropper SINRs individually
    but controls their pooled effect.
    """

    design: BeamformingDesign
    rate: float
    objective_value: float
    rank_ratio: float
    repair_invoked: bool
    iterations: int
    solve_time_ms: float


def slanr_objective(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams
) -> float:
    """Signal-to-leakage-and-noise ratio of a concrete design.

    Numerator: destination signal power.  Denominator: summed expected
    eavesdropper signal powers plus every noise contribution at the
    destination (forwarded relay noise, artificial noise, receiver
    noise).  Returns zero for an all-zero beamformer.
    """
    _check_pair(scenario, params)
    h_rd = scenario.h_rd.entries
    w_hsr = design.W @ scenario.h_sr.entries
    numerator = params.p_s * abs(np.vdot(h_rd, w_hsr)) ** 2
    leakage = 0.0
    for eve in scenario.eaves:
        cov = eve.h_robust.matrix
        leakage += params.p_s * float(np.real(np.vdot(w_hsr, cov @ w_hsr)))
    an = float(np.real(np.vdot(h_rd, design.Omega @ h_rd)))
    fwd_noise = params.sigma2 * float(np.linalg.norm(design.W.conj().T @ h_rd) ** 2)
    return numerator / (leakage + an + fwd_noise + params.sigma2)


def slanr_design(
    scenario: Scenario, params: SystemParams, options: SlanrOptions = None
) -> SlanrResult:
    """Maximize the pooled leakage ratio with one SDP solve.

    The fractional objective is linearized by Charnes-Cooper with the
    pooled denominator pinned to one; power and harvest constraints ride
    along scaled by tau.  Recovery and rank-one extraction follow, with
    the power-minimization repair as the fallback when the extraction
    residual exceeds the threshold.
    """
    options = options or SlanrOptions()
    _check_pair(scenario, params)
    matrices = build_problem_matrices(scenario)
    scaled, s2 = normalize_noise(params)
    n2 = matrices.A1.shape[0]
    n = matrices.num_antennas
    eye_n2 = np.eye(n2)
    eye_n = np.eye(n)
    sum_b1 = np.zeros((n2, n2), dtype=np.complex128)
    for b1 in matrices.B1:
        sum_b1 = sum_b1 + b1

    denom = (
        LinearFunc.trace("Q", scaled.p_s * sum_b1 + matrices.A2)
        + LinearFunc.trace("Y", matrices.h_rd_outer)
        + LinearFunc.scalar("tau")
    )
    power = (
        LinearFunc.trace("Q", scaled.p_s * matrices.C1 + eye_n2)
        + LinearFunc.trace("Y", eye_n)
        - LinearFunc.scalar("tau", scaled.p_t)
    )
    harvest = (
        LinearFunc.trace("Q", scaled.p_s * matrices.D1 + matrices.D2)
        + LinearFunc.trace("Y", matrices.h_rp_outer)
        - LinearFunc.scalar("tau", scaled.p_min / scaled.rho)
    )
    program = ConicProgram(
        matrix_vars=(MatrixVar("Q", n2), MatrixVar("Y", n)),
        scalar_vars=(ScalarVar("tau", lower=0.0),),
        sense="maximize",
        objective=LinearFunc.trace("Q", scaled.p_s * matrices.A1),
        eq_constraints=(eq(denom, 1.0),),
        ineq_constraints=(le(power, 0.0), ge(harvest, 0.0)),
    )
    result = solve(program, options.solver)
    if result.status == "infeasible":
        raise DesignInfeasibleError("the pooled-ratio SDP is infeasible")
    if result.status != "optimal":
        raise SolverFailureError(f"pooled-ratio SDP ended with status {result.status}")
    objective_value = float(result.objective)
    iterations = result.iterations
    solve_ms = result.solve_time_ms

    q = result.values["Q"] / s2
    upsilon = result.values["Y"]
    tau = float(result.values["tau"]) / s2
    w_tilde, omega = charnes_cooper_recover(q, upsilon, tau)
    extraction = rank_one_extract(w_tilde, options.rank_threshold)
    ratio = extraction.residual_ratio
    repair_invoked = False
    if not extraction.within_threshold:
        w_tilde, omega, repair_stats = _repair(
            objective_value, sum_b1, matrices, scaled, s2, options
        )
        iterations += repair_stats[0]
        solve_ms += repair_stats[1]
        extraction = rank_one_extract(w_tilde, options.rank_threshold)
        ratio = extraction.residual_ratio
        if not extraction.within_threshold:
            raise RankRepairError(ratio)
        repair_invoked = True
    w = extraction.vector.reshape((n, n), order="F")
    design = BeamformingDesign(W=w, Omega=psd_clamp(omega))
    design = scale_to_power_budget(design, scenario, params)
    rate = worst_case_secrecy_rate(design, scenario, params)
    return SlanrResult(
        design=design,
        rate=rate,
        objective_value=objective_value,
        rank_ratio=ratio,
        repair_invoked=repair_invoked,
        iterations=iterations,
        solve_time_ms=solve_ms,
    )


def _repair(phi, sum_b1, matrices, scaled, s2, options):
    """Minimum-power re-solve holding the pooled ratio near its optimum.

    The ratio floor starts a hair below the reported optimum and widens
    one decade per rung; a rung's solution counts only if it is a
    numerically credible matrix pair, which rejects the low-accuracy
    output a backend may emit this close to the feasibility boundary.
    """
    n2 = matrices.A1.shape[0]
    n = matrices.num_antennas
    eye_n2 = np.eye(n2)
    eye_n = np.eye(n)
    signal_power = LinearFunc.trace("Wt", scaled.p_s * matrices.C1 + eye_n2)
    total_power = signal_power + LinearFunc.trace("Om", eye_n)
    harvest = LinearFunc.trace(
        "Wt", scaled.p_s * matrices.D1 + matrices.D2
    ) + LinearFunc.trace("Om", matrices.h_rp_outer)

    def build(margin):
        phi_floor = phi * (1.0 - margin)
        floor = (
            LinearFunc.trace(
                "Wt",
                -scaled.p_s * matrices.A1 + phi_floor * (scaled.p_s * sum_b1 + matrices.A2),
            )
            + LinearFunc.trace("Om", phi_floor * matrices.h_rd_outer)
            + phi_floor
        )
        return ConicProgram(
            matrix_vars=(MatrixVar("Wt", n2), MatrixVar("Om", n)),
            sense="minimize",
            objective=signal_power,
            ineq_constraints=(
                le(floor, 0.0),
                le(total_power, scaled.p_t),
                ge(harvest, scaled.p_min / scaled.rho),
            ),
        )

    def validate(values, margin):
        wt = values["Wt"]
        om = values["Om"]
        eigs = np.linalg.eigvalsh(0.5 * (wt + wt.conj().T))
        if eigs[-1] <= 0.0 or eigs[0] < -1e-6 * eigs[-1]:
            return False
        num = scaled.p_s * float(np.trace(matrices.A1 @ wt).real)
        den = (
            float(np.trace((scaled.p_s * sum_b1 + matrices.A2) @ wt).real)
            + float(np.trace(matrices.h_rd_outer @ om).real)
            + 1.0
        )
        if den <= 0.0 or num < phi * (1.0 - margin) * den * (1.0 - 1e-5):
            return False
        power = float(np.trace((scaled.p_s * matrices.C1 + eye_n2) @ wt).real) + float(
            np.trace(om).real
        )
        hv = float(np.trace((scaled.p_s * matrices.D1 + matrices.D2) @ wt).real) + float(
            np.trace(matrices.h_rp_outer @ om).real
        )
        target = scaled.p_min / scaled.rho
        return power <= scaled.p_t * (1.0 + 1e-5) and hv >= target * (1.0 - 1e-5) - 1e-12

    base = options.solver or SolverOptions()
    result, _ = solve_with_margins(
        build, _REPAIR_MARGINS, base.with_backends("clarabel"), validate
    )
    return result.values["Wt"], result.values["Om"] * s2, (result.iterations, result.solve_time_ms)
