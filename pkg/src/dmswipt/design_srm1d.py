"""Worst-case secrecy rate maximization by one-dimensional search.

The max-min secrecy design is nonconvex, but fixing the common ceiling
``beta`` on every eavesdropper's expected SINR leaves a linear-fractional
SDP in the lifted pair (W_tilde, Omega): maximize the destination SINR
subject to leakage, relay power, and harvested-energy constraints.  Each
fixed-beta subproblem is convexified by the Charnes-Cooper change of
variables (Q, Upsilon, tau) = tau (W_tilde, Omega, 1) with the
denominator pinned to one, solved as an SDP, and mapped back.  The outer
search sweeps beta over [0, beta_max] on a uniform grid and then
polishes the incumbent with a bounded scalar minimizer, because the
rate curve is sharply peaked at small beta relative to its range.

Solutions are deliberately relaxed (no rank constraint).  The relaxation
is provably tight here, so the recovered W_tilde is rank one up to
solver accuracy; when the residual ratio exceeds the threshold, a
power-minimization repair resolves for the same operating point and
restores an exactly extractable solution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar

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
    ProblemMatrices,
    Scenario,
    SystemParams,
    _check_pair,
    build_problem_matrices,
    harvested_energy,
    normalize_noise,
    relay_transmit_power,
    scale_to_power_budget,
    worst_case_secrecy_rate,
)

__all__ = [
    "Srm1dOptions",
    "Srm1dDiagnostics",
    "Srm1dResult",
    "PhiSolve",
    "RepairOutcome",
    "beta_max",
    "solve_phi_subproblem",
    "power_min_repair",
    "srm_1d_design",
]

# Relative slack applied to the SINR floor inside the repair problem.
# Far below the 1e-6 feasibility tolerances, yet enough to keep the
# floor constraint strictly satisfiable for interior-point backends.
_REPAIR_MARGINS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


@dataclass(frozen=True)
class Srm1dOptions:
    """Knobs for the one-dimensional search.

    ``epsilon`` is the uniform grid step over [0, beta_max]; the default
    beta_max / 200 gives 201 points.  ``grid_points`` pins the point
    count directly and overrides ``epsilon``.  ``refine`` enables the
    bounded polish between the incumbent's grid neighbors; its absolute
    tolerance defaults to max(1e-3, 1e-6 beta_max).
    """

    epsilon: float = None
    grid_points: int = None
    rank_threshold: float = 1e-4
    solver: SolverOptions = field(default_factory=SolverOptions)
    refine: bool = True
    refine_xatol: float = None
    refine_max_evals: int = 30


@dataclass(frozen=True)
class PhiSolve:
    """One fixed-beta subproblem outcome.

    ``phi`` is the optimal destination SINR under the leakage ceiling.
    (Q, Upsilon, tau) are the fractional-lift variables, scaled so the
    recovery (Q / tau, Upsilon / tau) is in the caller's physical units.
    """

    beta: float
    status: str
    phi: float = None
    Q: np.ndarray = None
    Upsilon: np.ndarray = None
    tau: float = None
    iterations: int = 0
    solve_time_ms: float = 0.0
    backend: str = ""
    reduced_accuracy: bool = False


@dataclass(frozen=True)
class RepairOutcome:
    """Result of the power-minimization repair at a fixed (phi, beta)."""

    W_tilde: np.ndarray
    Omega: np.ndarray
    residual_ratio: float
    signal_power: float
    iterations: int = 0
    solve_time_ms: float = 0.0
    backend: str = ""


@dataclass(frozen=True)
class Srm1dDiagnostics:
    """Search trace: grids, per-point objectives, and repair bookkeeping.

    ``phi_values`` and ``rates`` carry -inf at infeasible grid points.
    All per-point sequences share the grid's length.
    """

    beta_max: float
    beta_grid: np.ndarray
    phi_values: np.ndarray
    rates: np.ndarray
    statuses: tuple
    chosen_index: int
    chosen_beta: float
    refine_evals: int
    refined_beta: float
    repair_invoked: bool
    rank_ratio: float
    total_iterations: int
    reduced_accuracy_count: int


@dataclass(frozen=True)
class Srm1dResult:
    design: BeamformingDesign
    rate: float
    diagnostics: Srm1dDiagnostics


def beta_max(matrices: ProblemMatrices, params: SystemParams) -> float:
    """Upper end of the leakage search interval.

    The largest destination SINR any feasible design could reach, namely
    P_s a1^H (sigma2 A2 + (sigma2^2 / P_t) I)^-1 a1, bounds every
    eavesdropper-side SINR ceiling worth searching.  Evaluated with a
    linear solve; the matrix is Hermitian positive definite.
    """
    dim = matrices.A2.shape[0]
    lhs = params.sigma2 * matrices.A2 + (params.sigma2**2 / params.p_t) * np.eye(dim)
    x = np.linalg.solve(lhs, matrices.a1)
    return float(params.p_s * np.real(np.vdot(matrices.a1, x)))


def _phi_program(beta: float, matrices: ProblemMatrices, scaled: SystemParams) -> ConicProgram:
    """Fractional SDP for one leakage ceiling, in unit-noise units."""
    n2 = matrices.A1.shape[0]
    n = matrices.num_antennas
    eye_n2 = np.eye(n2)
    eye_n = np.eye(n)
    denom = (
        LinearFunc.trace("Q", matrices.A2)
        + LinearFunc.trace("Y", matrices.h_rd_outer)
        + LinearFunc.scalar("tau")
    )
    ineqs = []
    for b1, b2, cov in zip(matrices.B1, matrices.B2, matrices.eve_covs):
        leak = (
            LinearFunc.trace("Q", scaled.p_s * b1 - beta * b2)
            - LinearFunc.trace("Y", beta * cov)
            - LinearFunc.scalar("tau", beta)
        )
        ineqs.append(le(leak, 0.0))
    power = (
        LinearFunc.trace("Q", scaled.p_s * matrices.C1 + eye_n2)
        + LinearFunc.trace("Y", eye_n)
        - LinearFunc.scalar("tau", scaled.p_t)
    )
    ineqs.append(le(power, 0.0))
    harvest = (
        LinearFunc.trace("Q", scaled.p_s * matrices.D1 + matrices.D2)
        + LinearFunc.trace("Y", matrices.h_rp_outer)
        - LinearFunc.scalar("tau", scaled.p_min / scaled.rho)
    )
    ineqs.append(ge(harvest, 0.0))
    return ConicProgram(
        matrix_vars=(MatrixVar("Q", n2), MatrixVar("Y", n)),
        scalar_vars=(ScalarVar("tau", lower=0.0),),
        sense="maximize",
        objective=LinearFunc.trace("Q", scaled.p_s * matrices.A1),
        eq_constraints=(eq(denom, 1.0),),
        ineq_constraints=tuple(ineqs),
    )


def solve_phi_subproblem(
    beta: float,
    matrices: ProblemMatrices,
    params: SystemParams,
    options: SolverOptions = None,
) -> PhiSolve:
    """Solve the fixed-beta subproblem and return the lifted solution.

    The SDP is assembled in unit-noise units for conditioning; the
    returned (Q, Upsilon, tau) are rescaled so that
    charnes_cooper_recover yields (W_tilde, Omega) in physical units,
    with the denominator normalization
    sigma2 Tr(A2 Q) + h_rd^H Upsilon h_rd + sigma2 tau = 1 preserved.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    scaled, s2 = normalize_noise(params)
    program = _phi_program(beta, matrices, scaled)
    result = solve(program, options)
    if result.status != "optimal":
        return PhiSolve(
            beta=float(beta),
            status=result.status,
            iterations=result.iterations,
            solve_time_ms=result.solve_time_ms,
            backend=result.backend,
            reduced_accuracy=result.reduced_accuracy,
        )
    return PhiSolve(
        beta=float(beta),
        status="optimal",
        phi=float(result.objective),
        Q=result.values["Q"] / s2,
        Upsilon=result.values["Y"],
        tau=float(result.values["tau"]) / s2,
        iterations=result.iterations,
        solve_time_ms=result.solve_time_ms,
        backend=result.backend,
        reduced_accuracy=result.reduced_accuracy,
    )


def power_min_repair(
    phi: float,
    beta: float,
    matrices: ProblemMatrices,
    params: SystemParams,
    options: SolverOptions = None,
    rank_threshold: float = 1e-4,
) -> RepairOutcome:
    """Re-solve for minimum signal power at a fixed operating point.

    Holding the destination SINR a hair below phi and keeping the
    leakage ceiling beta plus the power and harvest constraints,
    minimizing the forwarded signal-plus-noise power admits a rank-one
    optimum.  Because the floor pins the program to the feasibility
    boundary, only the interior-point backend is trusted here, and the
    floor widens one decade per rung whenever it fails or returns a
    solution that is not numerically credible.  Raises
    :class:`RankRepairError` if the solver still returns a higher-rank
    matrix beyond ``rank_threshold``.
    """
    scaled, s2 = normalize_noise(params)
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
            LinearFunc.trace("Wt", -scaled.p_s * matrices.A1 + phi_floor * matrices.A2)
            + LinearFunc.trace("Om", phi_floor * matrices.h_rd_outer)
            + phi_floor
        )
        ineqs = [le(floor, 0.0)]
        for b1, b2, cov in zip(matrices.B1, matrices.B2, matrices.eve_covs):
            leak = (
                LinearFunc.trace("Wt", scaled.p_s * b1 - beta * b2)
                - LinearFunc.trace("Om", beta * cov)
                - beta
            )
            ineqs.append(le(leak, 0.0))
        ineqs.append(le(total_power, scaled.p_t))
        ineqs.append(ge(harvest, scaled.p_min / scaled.rho))
        return ConicProgram(
            matrix_vars=(MatrixVar("Wt", n2), MatrixVar("Om", n)),
            sense="minimize",
            objective=signal_power,
            ineq_constraints=tuple(ineqs),
        )

    def validate(values, margin):
        wt = values["Wt"]
        om = values["Om"]
        eigs = np.linalg.eigvalsh(0.5 * (wt + wt.conj().T))
        if eigs[-1] <= 0.0 or eigs[0] < -1e-6 * eigs[-1]:
            return False
        num = scaled.p_s * float(np.trace(matrices.A1 @ wt).real)
        den = (
            float(np.trace(matrices.A2 @ wt).real)
            + float(np.trace(matrices.h_rd_outer @ om).real)
            + 1.0
        )
        if den <= 0.0 or num < phi * (1.0 - margin) * den * (1.0 - 1e-5):
            return False
        for b1, b2, cov in zip(matrices.B1, matrices.B2, matrices.eve_covs):
            leak_num = scaled.p_s * float(np.trace(b1 @ wt).real)
            leak_den = (
                float(np.trace(b2 @ wt).real)
                + float(np.trace(cov @ om).real)
                + 1.0
            )
            if leak_num > beta * leak_den + 1e-6 * (1.0 + num):
                return False
        power = float(np.trace((scaled.p_s * matrices.C1 + eye_n2) @ wt).real) + float(
            np.trace(om).real
        )
        hv = float(np.trace((scaled.p_s * matrices.D1 + matrices.D2) @ wt).real) + float(
            np.trace(matrices.h_rp_outer @ om).real
        )
        target = scaled.p_min / scaled.rho
        return power <= scaled.p_t * (1.0 + 1e-5) and hv >= target * (1.0 - 1e-5) - 1e-12

    base = options or SolverOptions()
    result, _ = solve_with_margins(
        build, _REPAIR_MARGINS, base.with_backends("clarabel"), validate
    )
    w_tilde = result.values["Wt"]
    extraction = rank_one_extract(w_tilde, rank_threshold)
    if not extraction.within_threshold:
        raise RankRepairError(extraction.residual_ratio)
    return RepairOutcome(
        W_tilde=w_tilde,
        Omega=result.values["Om"] * s2,
        residual_ratio=extraction.residual_ratio,
        signal_power=float(result.objective) * s2,
        iterations=result.iterations,
        solve_time_ms=result.solve_time_ms,
        backend=result.backend,
    )


def _rate_from_phi(phi: float, beta: float) -> float:
    return max(0.0, 0.5 * (np.log2(1.0 + phi) - np.log2(1.0 + beta)))


def _design_from_lift(w_tilde, omega, matrices, rank_threshold):
    extraction = rank_one_extract(w_tilde, rank_threshold)
    n = matrices.num_antennas
    w = extraction.vector.reshape((n, n), order="F")
    return BeamformingDesign(W=w, Omega=psd_clamp(omega)), extraction.residual_ratio


def _max_harvest_design(
    matrices: ProblemMatrices, scenario: Scenario, params: SystemParams
) -> BeamformingDesign:
    """Full-budget design that maximizes harvested power.

    Harvest and transmit power are both quadratic in (vec(W), v), so the
    best beamformer-only design is the top generalized eigenvector of the
    harvest/power pencil, and the best noise-only design points at the
    energy receiver; whichever wins gets the whole budget.  Attains the
    optimum of the zero-secrecy-rate boundary exactly.
    """
    n = matrices.num_antennas
    pencil_h = params.p_s * matrices.D1 + params.sigma2 * matrices.D2
    pencil_p = params.p_s * matrices.C1 + params.sigma2 * np.eye(n * n)
    vals, vecs = eigh(pencil_h, pencil_p)
    h_rp = scenario.h_rp.entries
    lam_an = float(np.real(np.vdot(h_rp, h_rp)))
    if vals[-1] >= lam_an:
        w = np.sqrt(params.p_t) * vecs[:, -1]
        design = BeamformingDesign(
            W=w.reshape((n, n), order="F"),
            Omega=np.zeros((n, n), dtype=np.complex128),
        )
    else:
        v = np.sqrt(params.p_t) * h_rp / np.linalg.norm(h_rp)
        design = BeamformingDesign(
            W=np.zeros((n, n), dtype=np.complex128),
            Omega=np.outer(v, v.conj()),
            an_vector=v,
        )
    return scale_to_power_budget(design, scenario, params)


def _feasible_enough(design, scenario, params):
    power_ok = relay_transmit_power(design, scenario, params) <= params.p_t * (1 + 1e-6)
    harvest_ok = harvested_energy(design, scenario, params) >= params.p_min * (1 - 1e-6)
    return power_ok and harvest_ok


def srm_1d_design(
    scenario: Scenario, params: SystemParams, options: Srm1dOptions = None
) -> Srm1dResult:
    """Full one-dimensional secrecy-rate search.

    Sweeps the leakage ceiling over a uniform grid on [0, beta_max]
    without early exit, breaking rate ties toward the smallest beta, then
    polishes the incumbent between its grid neighbors with a bounded
    scalar minimizer using the interior-point backend.  Recovery,
    rank-one extraction, and (when needed) the power-minimization repair
    produce the final design.  Raises DesignInfeasibleError when every
    grid point is infeasible.
    """
    options = options or Srm1dOptions()
    _check_pair(scenario, params)
    matrices = build_problem_matrices(scenario)
    bmax = beta_max(matrices, params)
    if options.grid_points is not None:
        if options.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        num_points = int(options.grid_points)
    else:
        step = options.epsilon if options.epsilon is not None else bmax / 200.0
        if step <= 0:
            raise ValueError("epsilon must be positive")
        num_points = max(2, int(round(bmax / step)) + 1)
    grid = np.linspace(0.0, bmax, num_points)

    phi_values = np.full(num_points, -np.inf)
    rates = np.full(num_points, -np.inf)
    statuses = []
    solutions = {}
    total_iterations = 0
    reduced_count = 0
    for i, beta in enumerate(grid):
        sol = solve_phi_subproblem(beta, matrices, params, options.solver)
        statuses.append(sol.status)
        total_iterations += sol.iterations
        reduced_count += int(sol.reduced_accuracy)
        if sol.status != "optimal":
            continue
        phi_values[i] = sol.phi
        rates[i] = _rate_from_phi(sol.phi, beta)
        solutions[i] = sol
    if not solutions:
        raise DesignInfeasibleError(
            "every leakage ceiling on the search grid is infeasible; "
            "the harvest floor likely exceeds what the power budget allows"
        )

    chosen_index = -1
    for i in sorted(solutions):
        if rates[i] > (rates[chosen_index] if chosen_index >= 0 else -np.inf):
            chosen_index = i
    best_beta = float(grid[chosen_index])
    best_sol = solutions[chosen_index]
    best_rate = rates[chosen_index]

    accurate = (options.solver or SolverOptions()).with_backends("clarabel", "scs")
    refine_evals = 0
    if options.refine and num_points >= 2:
        lo = float(grid[max(chosen_index - 1, 0)])
        hi = float(grid[min(chosen_index + 1, num_points - 1)])
        if hi > lo:
            xatol = (
                options.refine_xatol
                if options.refine_xatol is not None
                else max(1e-3, 1e-6 * bmax)
            )
            evals = {}

            def negative_rate(beta):
                sol = solve_phi_subproblem(float(beta), matrices, params, accurate)
                evals[float(beta)] = sol
                if sol.status != "optimal":
                    return 1e9
                return -_rate_from_phi(sol.phi, float(beta))

            minimize_scalar(
                negative_rate,
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": xatol, "maxiter": options.refine_max_evals},
            )
            refine_evals = len(evals)
            for beta, sol in evals.items():
                total_iterations += sol.iterations
                reduced_count += int(sol.reduced_accuracy)
                if sol.status != "optimal":
                    continue
                rate = _rate_from_phi(sol.phi, beta)
                if rate > best_rate + 1e-15 or (rate == best_rate and beta < best_beta):
                    best_rate = rate
                    best_beta = beta
                    best_sol = sol

    # Extraction quality depends on the backend's accuracy; make sure the
    # winning point was solved by the interior-point path when possible.
    if best_sol.backend != "clarabel":
        resolved = solve_phi_subproblem(best_beta, matrices, params, accurate)
        total_iterations += resolved.iterations
        if resolved.status == "optimal":
            reduced_count += int(resolved.reduced_accuracy)
            best_sol = resolved

    w_tilde, omega = charnes_cooper_recover(best_sol.Q, best_sol.Upsilon, best_sol.tau)
    design, ratio = _design_from_lift(w_tilde, omega, matrices, options.rank_threshold)
    design = scale_to_power_budget(design, scenario, params)
    repair_invoked = False
    # When no ceiling on the grid yields a positive rate, the optimum is
    # the zero-rate boundary: any budget-feasible design attains it, the
    # lift shrinks toward zero, and the repair program at phi ~ 0 is
    # degenerate.  Keep the projected extraction as long as it harvests.
    zero_rate_regime = best_rate <= 1e-6
    if ratio > options.rank_threshold or not _feasible_enough(design, scenario, params):
        harvest = harvested_energy(design, scenario, params)
        if zero_rate_regime:
            if harvest < params.p_min * (1 - 1e-6):
                design = _max_harvest_design(matrices, scenario, params)
                ratio = 0.0
                if harvested_energy(design, scenario, params) < params.p_min * (
                    1 - 1e-6
                ):
                    raise DesignInfeasibleError(
                        "the harvest floor exceeds what even the "
                        "maximum-harvest design can deliver"
                    )
        else:
            try:
                repair = power_min_repair(
                    best_sol.phi,
                    best_beta,
                    matrices,
                    params,
                    options.solver,
                    options.rank_threshold,
                )
            except SolverFailureError:
                # Zero-leakage operating points pin the repair program to a
                # face of the cone where both backends stall; a clean
                # extraction with the budget already projected is the better
                # answer there.
                if ratio > options.rank_threshold or harvest < params.p_min * (1 - 1e-3):
                    raise
            else:
                total_iterations += repair.iterations
                design, ratio = _design_from_lift(
                    repair.W_tilde, repair.Omega, matrices, options.rank_threshold
                )
                design = scale_to_power_budget(design, scenario, params)
                repair_invoked = True

    rate = worst_case_secrecy_rate(design, scenario, params)
    diagnostics = Srm1dDiagnostics(
        beta_max=bmax,
        beta_grid=grid,
        phi_values=phi_values,
        rates=rates,
        statuses=tuple(statuses),
        chosen_index=chosen_index,
        chosen_beta=best_beta,
        refine_evals=refine_evals,
        refined_beta=best_beta,
        repair_invoked=repair_invoked,
        rank_ratio=ratio,
        total_iterations=total_iterations,
        reduced_accuracy_count=reduced_count,
    )
    return Srm1dResult(design=design, rate=rate, diagnostics=diagnostics)
