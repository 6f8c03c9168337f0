"""Robust secure beamforming for a directional-modulation SWIPT relay.

The package designs amplify-and-forward relay beamformers and
artificial-noise covariances that keep an information receiver decodable,
an energy receiver charged, and imperfectly-located eavesdroppers
starved of SINR.  Three designs are provided (a one-dimensional secrecy
rate search over semidefinite relaxations, a single-solve pooled-ratio
relaxation, and an iterative convex approximation in beamformer space)
plus a zero-forcing baseline, together with the channel and robustness
models they share and a simulation pipeline for sweeps and bit error
probing.
"""
from ._errors import (
    ConfigError,
    DegenerateSolutionError,
    DesignInfeasibleError,
    DmswiptError,
    InvalidLinearizationError,
    RankRepairError,
    SolverFailureError,
)
from .array_channel import (
    AngleErrorModel,
    ArrayConfig,
    RobustCovariance,
    SteeringVector,
    path_loss,
    robust_covariance_analytic,
    robust_covariance_mc,
    sample_angle_error,
    sigma_from_ke,
    steering_vector,
    truncated_gaussian_pdf,
)
from .baseline_zf import ZfOptions, ZfResult, zf_design
from .conic_core import SolverOptions, SolverResult
from .design_sca import ScaOptions, ScaResult, sca_design
from .design_slanr import SlanrOptions, SlanrResult, slanr_design
from .design_srm1d import Srm1dOptions, Srm1dResult, srm_1d_design
from .evaluation import (
    BerConfig,
    ResultRow,
    SchemeOptions,
    SweepSpec,
    ber_vs_angle,
    complexity_estimate,
    run_sweep,
    write_ber_csv,
    write_sweep_csv,
)
from .system_model import (
    BeamformingDesign,
    Eavesdropper,
    Scenario,
    SystemParams,
    build_problem_matrices,
    build_scenario,
    dbm_to_watts,
    harvested_energy,
    relay_transmit_power,
    scale_to_power_budget,
    secrecy_rate_mc,
    sinr_destination,
    worst_case_secrecy_rate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AngleErrorModel",
    "ArrayConfig",
    "BeamformingDesign",
    "BerConfig",
    "ConfigError",
    "DegenerateSolutionError",
    "DesignInfeasibleError",
    "DmswiptError",
    "Eavesdropper",
    "InvalidLinearizationError",
    "RankRepairError",
    "ResultRow",
    "RobustCovariance",
    "ScaOptions",
    "ScaResult",
    "Scenario",
    "SchemeOptions",
    "SlanrOptions",
    "SlanrResult",
    "SolverFailureError",
    "SolverOptions",
    "SolverResult",
    "Srm1dOptions",
    "Srm1dResult",
    "SteeringVector",
    "SweepSpec",
    "SystemParams",
    "ZfOptions",
    "ZfResult",
    "ber_vs_angle",
    "build_problem_matrices",
    "build_scenario",
    "complexity_estimate",
    "dbm_to_watts",
    "harvested_energy",
    "path_loss",
    "relay_transmit_power",
    "robust_covariance_analytic",
    "robust_covariance_mc",
    "run_sweep",
    "sample_angle_error",
    "sca_design",
    "scale_to_power_budget",
    "secrecy_rate_mc",
    "sigma_from_ke",
    "sinr_destination",
    "slanr_design",
    "srm_1d_design",
    "steering_vector",
    "truncated_gaussian_pdf",
    "worst_case_secrecy_rate",
    "write_ber_csv",
    "write_sweep_csv",
    "zf_design",
]
