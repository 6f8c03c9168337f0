"""Sweeps, bit-error-rate probing, complexity estimates, and CSV output.

Sweep geometry follows a fixed planar layout derived from the base
scenario: every node sits at distance d = d0 / sqrt(gain) from the relay
(which anchors the origin) along its steering angle.  Relay relocation
sweeps move the relay up the y axis and recompute each link's angle and
path gain from the unchanged node positions.

Outputs are plain CSV with fixed headers.  The ``solve_ms`` column
carries the backend's deterministic iteration count as an effort proxy
rather than wall-clock milliseconds, so identical seeds produce
byte-identical files; wall time stays available on the in-memory result
objects.  Floats are rendered with 12 significant digits.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import (
    DegenerateSolutionError,
    DesignInfeasibleError,
    RankRepairError,
    SolverFailureError,
)
from ._kernels import qpsk_ber
from .array_channel import AngleErrorModel, steering_vector
from .baseline_zf import ZfOptions, zf_design
from .design_sca import ScaOptions, sca_design
from .design_slanr import SlanrOptions, slanr_design
from .design_srm1d import Srm1dOptions, srm_1d_design
from .system_model import (
    BeamformingDesign,
    Scenario,
    SystemParams,
    build_scenario,
    dbm_to_watts,
    harvested_energy,
    relay_transmit_power,
)

__all__ = [
    "SCHEMES",
    "SWEEP_VARIABLES",
    "SWEEP_CSV_HEADER",
    "BER_CSV_HEADER",
    "SchemeOptions",
    "SweepSpec",
    "BerConfig",
    "ResultRow",
    "run_sweep",
    "ber_vs_angle",
    "complexity_estimate",
    "write_sweep_csv",
    "write_ber_csv",
    "format_float",
]

SCHEMES = ("srm1d", "slanr", "sca", "zf", "srm1d_perfect")
SWEEP_VARIABLES = (
    "relay_power_dbm",
    "pmin_dbm",
    "dtheta_max_deg",
    "relay_y_m",
    "num_eves",
)
SWEEP_CSV_HEADER = (
    "sweep_value,scheme,secrecy_rate_bps_hz,relay_power_w,"
    "harvested_w,solver_status,solve_ms,rank_ratio"
)
BER_CSV_HEADER = "angle_deg,scheme,ber"

# A zero angular spread cannot be represented by the truncated Gaussian
# itself; this stand-in is narrow enough that the robust covariance
# matches the exact outer product to well below every tolerance in use.
_MIN_SPREAD_RAD = 1e-9


@dataclass(frozen=True)
class SchemeOptions:
    """Per-scheme design options used by the sweep engine."""

    srm1d: Srm1dOptions = field(default_factory=Srm1dOptions)
    slanr: SlanrOptions = field(default_factory=SlanrOptions)
    sca: ScaOptions = field(default_factory=ScaOptions)
    zf: ZfOptions = field(default_factory=ZfOptions)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: which variable, over which grid, for which schemes.

    ``base_scenario`` supplies the geometry (angles and gains encode the
    node positions through d0); ``params`` the operating point.  Each
    grid cell is rebuilt from these, never mutated in place.
    """

    variable: str
    grid: tuple
    schemes: tuple
    base_scenario: Scenario
    params: SystemParams
    seed: int = 0
    d0_m: float = 10.0
    options: SchemeOptions = field(default_factory=SchemeOptions)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.grid:
            raise ValueError("sweep grid must not be empty")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if self.variable == "num_eves":
            for v in self.grid:
                if v != int(v) or v < 0:
                    raise ValueError("num_eves grid values must be nonnegative integers")
                if int(v) > self.base_scenario.num_eves:
                    raise ValueError(
                        "num_eves grid exceeds the eavesdroppers available "
                        "in the base scenario"
                    )


@dataclass(frozen=True)
class BerConfig:
    """QPSK probing configuration.

    ``probe_angles`` are radians over [0, pi], default one-degree steps.
    ``probe_gain`` is the path gain given to the hypothetical probe
    receivers; None uses the destination's.
    """

    num_symbols: int = 100000
    probe_angles: tuple = field(
        default_factory=lambda: tuple(np.deg2rad(np.arange(0.0, 181.0, 1.0)))
    )
    modulation: str = "qpsk-gray"
    seed: int = 0
    probe_gain: float = None

    def __post_init__(self):
        object.__setattr__(self, "probe_angles", tuple(float(a) for a in self.probe_angles))
        if self.num_symbols < 1:
            raise ValueError("num_symbols must be positive")
        if self.modulation != "qpsk-gray":
            raise ValueError("only Gray-mapped QPSK is supported")
        if not self.probe_angles:
            raise ValueError("probe_angles must not be empty")


@dataclass(frozen=True)
class ResultRow:
    """One sweep cell, mirroring the CSV schema field for field."""

    sweep_value: float
    scheme: str
    secrecy_rate_bps_hz: float
    relay_power_w: float
    harvested_w: float
    solver_status: str
    solve_ms: float
    rank_ratio: float = None


def _node_position(angle: float, gain: float, d0: float) -> np.ndarray:
    distance = d0 / math.sqrt(gain)
    return np.array([distance * math.cos(angle), distance * math.sin(angle)])


def _relocated(angle: float, gain: float, relay_y: float, d0: float):
    position = _node_position(angle, gain, d0)
    rel = position - np.array([0.0, relay_y])
    distance = float(np.linalg.norm(rel))
    return math.atan2(rel[1], rel[0]), float((distance / d0) ** -2.0)


def _rebuild_scenario(base: Scenario, model: AngleErrorModel, relay_y: float,
                      d0: float, num_eves: int, perfect_csi: bool) -> Scenario:
    links = {}
    for name, vec in (("sr", base.h_sr), ("rd", base.h_rd), ("rp", base.h_rp)):
        links[name] = _relocated(vec.angle, vec.gain, relay_y, d0)
    eves = base.eaves[:num_eves]
    eve_hats = []
    eve_gains = []
    eve_true = []
    for eve in eves:
        theta, gain = _relocated(eve.theta_hat, eve.gain, relay_y, d0)
        eve_hats.append(theta)
        eve_gains.append(gain)
        true_theta, _ = _relocated(eve.theta_true, eve.gain, relay_y, d0)
        eve_true.append(true_theta)
    return build_scenario(
        base.array,
        model,
        links["sr"][0],
        links["sr"][1],
        links["rd"][0],
        links["rd"][1],
        links["rp"][0],
        links["rp"][1],
        eve_hats,
        eve_gains,
        eve_true_angles=eve_true,
        perfect_csi=perfect_csi,
    )


def _cell_inputs(spec: SweepSpec, value: float, perfect_csi: bool):
    """Scenario and params for one grid point, rebuilt from the base."""
    base = spec.base_scenario
    params = spec.params
    model = base.error_model
    relay_y = 0.0
    num_eves = base.num_eves
    if spec.variable == "relay_power_dbm":
        params = replace(params, p_t=dbm_to_watts(value))
    elif spec.variable == "pmin_dbm":
        params = replace(params, p_min=dbm_to_watts(value))
    elif spec.variable == "dtheta_max_deg":
        spread = max(np.deg2rad(value), _MIN_SPREAD_RAD)
        model = AngleErrorModel.from_ke(spread, model.k_e)
    elif spec.variable == "relay_y_m":
        relay_y = value
    elif spec.variable == "num_eves":
        num_eves = int(value)
        params = replace(params, num_eves=num_eves)
    scenario = _rebuild_scenario(base, model, relay_y, spec.d0_m, num_eves, perfect_csi)
    return scenario, params


def _run_cell(args):
    value, scheme, scenario, params, options = args
    try:
        if scheme in ("srm1d", "srm1d_perfect"):
            res = srm_1d_design(scenario, params, options.srm1d)
            design = res.design
            status = "optimal"
            effort = res.diagnostics.total_iterations
            ratio = res.diagnostics.rank_ratio
        elif scheme == "slanr":
            res = slanr_design(scenario, params, options.slanr)
            design = res.design
            status = "optimal"
            effort = res.iterations
            ratio = res.rank_ratio
        elif scheme == "sca":
            res = sca_design(scenario, params, options.sca)
            design = res.design
            status = "optimal"
            effort = sum(row.solver_iterations for row in res.trace)
            ratio = None
        else:
            res = zf_design(scenario, params, options.zf)
            design = res.design
            status = res.status
            effort = 0
            ratio = None
        return ResultRow(
            sweep_value=value,
            scheme=scheme,
            secrecy_rate_bps_hz=res.rate,
            relay_power_w=relay_transmit_power(design, scenario, params),
            harvested_w=harvested_energy(design, scenario, params),
            solver_status=status,
            solve_ms=float(effort),
            rank_ratio=ratio,
        )
    except DesignInfeasibleError:
        return ResultRow(value, scheme, 0.0, 0.0, 0.0, "infeasible", 0.0, None)
    except (RankRepairError, SolverFailureError, DegenerateSolutionError) as exc:
        return ResultRow(
            value, scheme, 0.0, 0.0, 0.0, f"numerical_failure:{type(exc).__name__}", 0.0, None
        )


def run_sweep(spec: SweepSpec, workers: int = None):
    """Evaluate every (grid value, scheme) cell and return ordered rows.

    Cells are independent; with ``workers`` > 1 they run in separate
    processes.  Row order is grid-major then scheme, matching
    ``spec.grid`` and ``spec.schemes`` order regardless of worker
    scheduling.  Per-cell failures become rows with an explanatory
    status instead of aborting the sweep.
    """
    tasks = []
    for value in spec.grid:
        shared = None
        perfect = None
        for scheme in spec.schemes:
            wants_perfect = scheme == "srm1d_perfect"
            if wants_perfect:
                if perfect is None:
                    perfect = _cell_inputs(spec, value, perfect_csi=True)
                scenario, params = perfect
            else:
                if shared is None:
                    shared = _cell_inputs(spec, value, perfect_csi=False)
                scenario, params = shared
            tasks.append((value, scheme, scenario, params, spec.options))
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(task) for task in tasks]
    return rows


def _an_sqrt(design: BeamformingDesign) -> np.ndarray:
    if design.an_vector is not None:
        v = design.an_vector
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return np.zeros_like(design.Omega)
        return np.outer(v, v.conj()) / norm
    w, vecs = np.linalg.eigh(design.Omega)
    return (vecs * np.sqrt(np.maximum(w, 0.0))) @ vecs.conj().T


def _ber_cell(args):
    index, angle, gain, design, scenario, params, config = args
    h = steering_vector(scenario.array, angle, gain).entries
    g_eff = np.sqrt(params.p_s) * complex(np.vdot(h, design.W @ scenario.h_sr.entries))
    sigma = np.sqrt(params.sigma2)
    u_relay = sigma * (h.conj() @ design.W)
    u_an = h.conj() @ _an_sqrt(design)
    n = scenario.array.num_antennas
    symbols = config.num_symbols
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    # Draw order is part of the determinism contract.
    bits = rng.integers(0, 2, size=2 * symbols, dtype=np.uint8)
    noise_relay = (
        rng.standard_normal((n, symbols)) + 1j * rng.standard_normal((n, symbols))
    ) / np.sqrt(2.0)
    noise_an = (
        rng.standard_normal((n, symbols)) + 1j * rng.standard_normal((n, symbols))
    ) / np.sqrt(2.0)
    noise_rx = (
        sigma
        * (rng.standard_normal(symbols) + 1j * rng.standard_normal(symbols))
        / np.sqrt(2.0)
    )
    ber = qpsk_ber(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx)
    return float(np.degrees(angle)), float(ber)


def ber_vs_angle(
    design: BeamformingDesign,
    scenario: Scenario,
    params: SystemParams,
    config: BerConfig = None,
    workers: int = None,
):
    """Genie-detected QPSK bit error rate of probe receivers versus angle.

    Each probe angle gets an independent seeded stream (derived from the
    config seed and the angle index) feeding the simulated receive
    chain: forwarded signal, forwarded relay noise, artificial noise,
    and receiver noise, coherently equalized by the known effective
    channel gain.  Returns (angle_deg, ber) pairs in grid order.
    """
    config = config or BerConfig()
    gain = config.probe_gain if config.probe_gain is not None else scenario.h_rd.gain
    tasks = [
        (i, angle, gain, design, scenario, params, config)
        for i, angle in enumerate(config.probe_angles)
    ]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_ber_cell, tasks))
    else:
        rows = [_ber_cell(task) for task in tasks]
    return rows


def complexity_estimate(
    scheme: str,
    num_antennas: int,
    num_eves: int,
    grid_points: int = None,
    sca_iterations: int = None,
) -> float:
    """Interior-point arithmetic cost estimate, log factors suppressed.

    Counts the dominant per-iteration flops of a generic conic
    interior-point method times the iteration-count growth root, for one
    solve, scaled by the outer loop length: the leakage grid for the
    one-dimensional search (``grid_points``), the convex-approximation
    pass count for the SCA design (``sca_iterations``), one for the
    pooled-ratio design.
    """
    n = int(num_antennas)
    m = int(num_eves)
    if n < 1 or m < 0:
        raise ValueError("num_antennas must be positive and num_eves nonnegative")
    if scheme == "srm1d":
        if grid_points is None or grid_points < 1:
            raise ValueError("srm1d complexity needs a positive grid_points")
        vars_sdp = n**4 + n**2 + 1
        per_iter = (
            n**6 + n**3 + vars_sdp * (n**4 + n**2 + m + 5) + m + 5 + vars_sdp**2
        )
        return float(
            grid_points * vars_sdp * math.sqrt(n**2 + n + m + 5) * per_iter
        )
    if scheme == "slanr":
        vars_sdp = n**4 + n**2 + 1
        per_iter = n**6 + n**3 + vars_sdp * (n**4 + n**2 + 5) + 5 + vars_sdp**2
        return float(vars_sdp * math.sqrt(n**2 + n + 5) * per_iter)
    if scheme == "sca":
        if sca_iterations is None or sca_iterations < 1:
            raise ValueError("sca complexity needs a positive sca_iterations")
        vars_socp = n**2 + n + 4
        per_iter = (
            (n**2 + n) ** 2
            + (m + 1) * (n**2 + n + 1) ** 2
            + 6
            + 2 * vars_socp
            + vars_socp**2
        )
        return float(
            sca_iterations * vars_socp * math.sqrt(2 * m + 8) * per_iter
        )
    raise ValueError(f"unknown scheme {scheme!r}")


def format_float(value: float) -> str:
    """12-significant-digit rendering shared by every CSV writer."""
    return format(float(value), ".12g")


def write_sweep_csv(rows, path: str):
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        ratio = "" if row.rank_ratio is None else format_float(row.rank_ratio)
        lines.append(
            ",".join(
                [
                    format_float(row.sweep_value),
                    row.scheme,
                    format_float(row.secrecy_rate_bps_hz),
                    format_float(row.relay_power_w),
                    format_float(row.harvested_w),
                    row.solver_status,
                    format_float(row.solve_ms),
                    ratio,
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ber_csv(rows_by_scheme, path: str):
    """``rows_by_scheme``: iterable of (scheme, rows) with rows from
    :func:`ber_vs_angle`."""
    lines = [BER_CSV_HEADER]
    for scheme, rows in rows_by_scheme:
        for angle_deg, ber in rows:
            lines.append(f"{format_float(angle_deg)},{scheme},{format_float(ber)}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
