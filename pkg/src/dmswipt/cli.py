"""Command line interface.

Five subcommands: ``design`` (one beamformer at the configured
operating point), ``sweep`` (parameter sweeps to CSV), ``ber``
(bit-error-rate versus probe angle to CSV), ``covcheck`` (analytic
robust covariance against a Monte Carlo reference), and ``complexity``
(arithmetic cost estimates).

Configuration is INI with sections [array], [powers], [angles],
[error], [distances], [run]; every field is optional and defaults to
the reference operating point (six antennas at half-wavelength spacing,
all links at 80 m, 30 dBm powers, two eavesdroppers).  Unknown sections
or fields are rejected rather than ignored.

Environment: DMSWIPT_SOLVER_TOL overrides both conic solver tolerances;
DMSWIPT_NO_NUMBA switches the simulation kernels to pure numpy.
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from ._errors import ConfigError, DesignInfeasibleError, DmswiptError
from .array_channel import (
    AngleErrorModel,
    ArrayConfig,
    path_loss,
    robust_covariance_mc,
)
from .baseline_zf import ZfOptions, zf_design
from .conic_core import SolverOptions
from .design_sca import ScaOptions, sca_design
from .design_slanr import SlanrOptions, slanr_design
from .design_srm1d import Srm1dOptions, srm_1d_design
from .evaluation import (
    SCHEMES,
    BerConfig,
    SchemeOptions,
    SweepSpec,
    ber_vs_angle,
    complexity_estimate,
    format_float,
    run_sweep,
    write_ber_csv,
    write_sweep_csv,
)
from .system_model import (
    SystemParams,
    build_scenario,
    dbm_to_watts,
    harvested_energy,
    relay_transmit_power,
)

__all__ = ["RunConfig", "parse_config", "serialize_config", "scenario_from_config", "main"]

_MIN_SPREAD_RAD = 1e-9

_SWEEP_PARAM_ALIASES = {
    "pt": "relay_power_dbm",
    "relay_power_dbm": "relay_power_dbm",
    "pmin": "pmin_dbm",
    "pmin_dbm": "pmin_dbm",
    "dtheta": "dtheta_max_deg",
    "dtheta_max_deg": "dtheta_max_deg",
    "relay_y": "relay_y_m",
    "relay_y_m": "relay_y_m",
    "num_eves": "num_eves",
}


@dataclass(frozen=True)
class RunConfig:
    """Full run description; defaults reproduce the reference setup."""

    n_antennas: int = 6
    spacing_over_lambda: float = 0.5
    ps_dbm: float = 30.0
    pt_dbm: float = 30.0
    pmin_dbm: float = 10.0
    sigma2_dbm: float = -10.0
    rho: float = 0.8
    theta_sr_deg: float = -70.0
    theta_rd_deg: float = 90.0
    theta_rp_deg: float = 45.0
    theta_re_deg: tuple = (60.0, 110.0)
    dtheta_max_deg: float = 6.0
    k_e: float = 0.9
    d0_m: float = 10.0
    d_sr_m: float = 80.0
    d_rd_m: float = 80.0
    d_rp_m: float = 80.0
    d_re_m: tuple = (80.0, 80.0)
    scheme: str = "srm1d"
    seed: int = 0
    beta_grid_points: int = 0
    sca_delta: float = 1e-5
    sca_max_iterations: int = 150
    rank_threshold: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "theta_re_deg", tuple(float(v) for v in self.theta_re_deg))
        object.__setattr__(self, "d_re_m", tuple(float(v) for v in self.d_re_m))
        if len(self.theta_re_deg) != len(self.d_re_m):
            raise ConfigError(
                "[angles] theta_re_deg and [distances] d_re_m must have the same length"
            )
        if self.scheme not in SCHEMES:
            raise ConfigError(f"[run] scheme: unknown scheme {self.scheme!r}")


_FLOAT_LIST = "float_list"
_SCHEMA = {
    "array": {"n_antennas": int, "spacing_over_lambda": float},
    "powers": {
        "ps_dbm": float,
        "pt_dbm": float,
        "pmin_dbm": float,
        "sigma2_dbm": float,
        "rho": float,
    },
    "angles": {
        "theta_sr_deg": float,
        "theta_rd_deg": float,
        "theta_rp_deg": float,
        "theta_re_deg": _FLOAT_LIST,
    },
    "error": {"dtheta_max_deg": float, "k_e": float},
    "distances": {
        "d0_m": float,
        "d_sr_m": float,
        "d_rd_m": float,
        "d_rp_m": float,
        "d_re_m": _FLOAT_LIST,
    },
    "run": {
        "scheme": str,
        "seed": int,
        "beta_grid_points": int,
        "sca_delta": float,
        "sca_max_iterations": int,
        "rank_threshold": float,
    },
}


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind is _FLOAT_LIST:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            return tuple(float(p) for p in parts)
        if kind is str:
            return raw.strip()
        return kind(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def parse_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from exc
    kwargs = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"[{section}] unknown field {key!r}")
            kwargs[key] = _convert(section, key, raw, _SCHEMA[section][key])
    return RunConfig(**kwargs)


def serialize_config(config: RunConfig) -> str:
    """INI text whose parse reproduces ``config`` exactly."""
    values = {f.name: getattr(config, f.name) for f in fields(config)}
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = values[key]
            if isinstance(value, tuple):
                rendered = ", ".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        lines.append("")
    return "\n".join(lines)


def scenario_from_config(config: RunConfig):
    """Scenario and system parameters implied by a run configuration."""
    try:
        array = ArrayConfig(
            config.n_antennas, element_spacing=config.spacing_over_lambda
        )
        spread = max(np.deg2rad(config.dtheta_max_deg), _MIN_SPREAD_RAD)
        model = AngleErrorModel.from_ke(spread, config.k_e)
        scenario = build_scenario(
            array,
            model,
            np.deg2rad(config.theta_sr_deg),
            path_loss(config.d_sr_m, config.d0_m),
            np.deg2rad(config.theta_rd_deg),
            path_loss(config.d_rd_m, config.d0_m),
            np.deg2rad(config.theta_rp_deg),
            path_loss(config.d_rp_m, config.d0_m),
            [np.deg2rad(t) for t in config.theta_re_deg],
            [path_loss(d, config.d0_m) for d in config.d_re_m],
        )
        params = SystemParams(
            p_s=dbm_to_watts(config.ps_dbm),
            p_t=dbm_to_watts(config.pt_dbm),
            p_min=dbm_to_watts(config.pmin_dbm),
            rho=config.rho,
            sigma2=dbm_to_watts(config.sigma2_dbm),
            num_eves=len(config.theta_re_deg),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, params


def _solver_from_env() -> SolverOptions:
    raw = os.environ.get("DMSWIPT_SOLVER_TOL")
    if raw is None:
        return SolverOptions()
    try:
        tol = float(raw)
    except ValueError as exc:
        raise ConfigError(f"DMSWIPT_SOLVER_TOL: cannot parse {raw!r}") from exc
    if tol <= 0:
        raise ConfigError("DMSWIPT_SOLVER_TOL must be positive")
    return SolverOptions(abs_tol=tol, rel_tol=tol)


def _scheme_options(config: RunConfig) -> SchemeOptions:
    base = _solver_from_env()
    grid_points = config.beta_grid_points if config.beta_grid_points > 0 else None
    return SchemeOptions(
        srm1d=Srm1dOptions(
            grid_points=grid_points,
            rank_threshold=config.rank_threshold,
            solver=base,
        ),
        slanr=SlanrOptions(
            rank_threshold=config.rank_threshold,
            solver=base.with_backends("clarabel", "scs"),
        ),
        sca=ScaOptions(
            delta=config.sca_delta,
            max_iterations=config.sca_max_iterations,
            solver=base.with_backends("clarabel", "scs"),
        ),
        zf=ZfOptions(),
    )


def _design_once(scheme: str, scenario, params, options: SchemeOptions):
    """Run one design; returns (design, rate, status, effort, rank_ratio)."""
    if scheme in ("srm1d", "srm1d_perfect"):
        res = srm_1d_design(scenario, params, options.srm1d)
        return res.design, res.rate, "optimal", res.diagnostics.total_iterations, (
            res.diagnostics.rank_ratio
        )
    if scheme == "slanr":
        res = slanr_design(scenario, params, options.slanr)
        return res.design, res.rate, "optimal", res.iterations, res.rank_ratio
    if scheme == "sca":
        res = sca_design(scenario, params, options.sca)
        effort = sum(row.solver_iterations for row in res.trace)
        return res.design, res.rate, "optimal", effort, None
    res = zf_design(scenario, params, options.zf)
    return res.design, res.rate, res.status, 0, None


def _perfect_pair(config: RunConfig):
    scenario, params = scenario_from_config(config)
    perfect = build_scenario(
        scenario.array,
        scenario.error_model,
        scenario.h_sr.angle,
        scenario.h_sr.gain,
        scenario.h_rd.angle,
        scenario.h_rd.gain,
        scenario.h_rp.angle,
        scenario.h_rp.gain,
        [e.theta_hat for e in scenario.eaves],
        [e.gain for e in scenario.eaves],
        perfect_csi=True,
    )
    return perfect, params


def _matrix_lines(name: str, matrix: np.ndarray):
    lines = [name]
    for row in np.atleast_2d(matrix):
        lines.append(",".join(format_float(v) for v in row))
    return lines


def _cmd_design(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    if args.scheme:
        config = replace(config, scheme=args.scheme)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    options = _scheme_options(config)
    if config.scheme == "srm1d_perfect":
        scenario, params = _perfect_pair(config)
    else:
        scenario, params = scenario_from_config(config)
    design, rate, status, effort, ratio = _design_once(
        config.scheme, scenario, params, options
    )
    power = relay_transmit_power(design, scenario, params)
    harvest = harvested_energy(design, scenario, params)
    print(
        f"{config.scheme}: rate={rate:.6f} bit/s/Hz power={power:.6f} W "
        f"harvest={harvest:.6e} W status={status}"
    )
    if args.out:
        ratio_text = "" if ratio is None else format_float(ratio)
        lines = [
            "scheme,secrecy_rate_bps_hz,relay_power_w,harvested_w,"
            "solver_status,solve_ms,rank_ratio",
            ",".join(
                [
                    config.scheme,
                    format_float(rate),
                    format_float(power),
                    format_float(harvest),
                    status,
                    format_float(effort),
                    ratio_text,
                ]
            ),
        ]
        lines += _matrix_lines("W_real", design.W.real)
        lines += _matrix_lines("W_imag", design.W.imag)
        lines += _matrix_lines("Omega_real", design.Omega.real)
        lines += _matrix_lines("Omega_imag", design.Omega.imag)
        with open(args.out, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    if status == "harvest_shortfall":
        return 2
    return 0


def _parse_grid(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r}: expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"grid {text!r}: cannot parse bounds") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"grid {text!r}: need step > 0 and stop >= start")
        return tuple(np.arange(start, stop + 0.5 * step, step))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: cannot parse values") from exc


def _cmd_sweep(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    variable = _SWEEP_PARAM_ALIASES.get(args.param)
    if variable is None:
        raise ConfigError(f"unknown sweep parameter {args.param!r}")
    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    grid = _parse_grid(args.grid)
    scenario, params = scenario_from_config(config)
    spec = SweepSpec(
        variable=variable,
        grid=grid,
        schemes=schemes,
        base_scenario=scenario,
        params=params,
        seed=config.seed,
        d0_m=config.d0_m,
        options=_scheme_options(config),
    )
    rows = run_sweep(spec, workers=args.workers)
    write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_ber(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    if args.scheme:
        config = replace(config, scheme=args.scheme)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    options = _scheme_options(config)
    if config.scheme == "srm1d_perfect":
        scenario, params = _perfect_pair(config)
    else:
        scenario, params = scenario_from_config(config)
    design, _, status, _, _ = _design_once(config.scheme, scenario, params, options)
    if status == "harvest_shortfall":
        print("harvest target unreachable; no beamformer to probe", file=sys.stderr)
        return 2
    step = args.step_deg
    if step <= 0:
        raise ConfigError("--step-deg must be positive")
    angles = tuple(np.deg2rad(np.arange(0.0, 180.0 + 0.5 * step, step)))
    ber_config = BerConfig(
        num_symbols=args.symbols, probe_angles=angles, seed=config.seed
    )
    rows = ber_vs_angle(design, scenario, params, ber_config, workers=args.workers)
    write_ber_csv([(config.scheme, rows)], args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_covcheck(args) -> int:
    config = parse_config(args.config) if args.config else RunConfig()
    scenario, _ = scenario_from_config(config)
    if not scenario.eaves:
        raise ConfigError("covcheck needs at least one eavesdropper in the config")
    eve = scenario.eaves[0]
    analytic = eve.h_robust.matrix
    rng = np.random.default_rng(args.seed)
    mc = robust_covariance_mc(
        scenario.array,
        eve.theta_hat,
        eve.gain,
        scenario.error_model,
        args.samples,
        rng,
    ).matrix
    rel = float(np.linalg.norm(analytic - mc) / np.linalg.norm(analytic))
    print(f"relative Frobenius deviation: {rel:.6e} ({args.samples} samples)")
    return 0 if rel <= 0.02 else 1


def _cmd_complexity(args) -> int:
    value = complexity_estimate(
        args.scheme,
        args.antennas,
        args.eves,
        grid_points=args.grid_points,
        sca_iterations=args.iterations,
    )
    print(f"{value:.6e}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmswipt",
        description="robust secure beamforming for a directional-modulation relay",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="solve one design and print a summary")
    p_design.add_argument("--config", default=None)
    p_design.add_argument("--scheme", default=None, choices=SCHEMES)
    p_design.add_argument("--seed", type=int, default=None)
    p_design.add_argument("--out", default=None)
    p_design.set_defaults(func=_cmd_design)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter to CSV")
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--grid", required=True, help="start:stop:step or comma list")
    p_sweep.add_argument("--schemes", default="srm1d,slanr,sca,zf")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_ber = sub.add_parser("ber", help="bit error rate versus probe angle to CSV")
    p_ber.add_argument("--config", default=None)
    p_ber.add_argument("--scheme", default="sca", choices=SCHEMES)
    p_ber.add_argument("--symbols", type=int, default=100000)
    p_ber.add_argument("--step-deg", type=float, default=1.0, dest="step_deg")
    p_ber.add_argument("--out", required=True)
    p_ber.add_argument("--workers", type=int, default=None)
    p_ber.add_argument("--seed", type=int, default=None)
    p_ber.set_defaults(func=_cmd_ber)

    p_cov = sub.add_parser(
        "covcheck", help="analytic robust covariance against Monte Carlo"
    )
    p_cov.add_argument("--config", default=None)
    p_cov.add_argument("--samples", type=int, default=1000000)
    p_cov.add_argument("--seed", type=int, default=0)
    p_cov.set_defaults(func=_cmd_covcheck)

    p_cx = sub.add_parser("complexity", help="arithmetic cost estimate")
    p_cx.add_argument("--scheme", required=True, choices=("srm1d", "slanr", "sca"))
    p_cx.add_argument("--antennas", type=int, required=True)
    p_cx.add_argument("--eves", type=int, required=True)
    p_cx.add_argument("--grid-points", type=int, default=None, dest="grid_points")
    p_cx.add_argument("--iterations", type=int, default=None)
    p_cx.set_defaults(func=_cmd_complexity)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DesignInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except DmswiptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
