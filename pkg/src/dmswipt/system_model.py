"""Two-slot amplify-and-forward signal model with energy harvesting.

A source with a directional-modulation array sends toward the relay in
slot one.  In slot two the relay applies a beamforming matrix W to the
received vector, adds artificial noise with covariance Omega, and
retransmits.  The destination, an energy receiver, and M imperfectly
located eavesdroppers observe the relay transmission through steering
vectors of a common uniform linear array.

All quadratic performance measures exist in two algebraically equal
forms: matrix expressions in (W, Omega) and vectorized expressions in
w = vec(W) using column-major stacking, for which vec(A X B) =
(B^T kron A) vec(X).  The lifted coefficient matrices live in
:class:`ProblemMatrices`; the functions in this module evaluate the
matrix forms directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_channel import (
    AngleErrorModel,
    ArrayConfig,
    RobustCovariance,
    SteeringVector,
    robust_covariance_analytic,
    steering_vector,
)

__all__ = [
    "SystemParams",
    "Eavesdropper",
    "Scenario",
    "ProblemMatrices",
    "BeamformingDesign",
    "build_scenario",
    "build_problem_matrices",
    "normalize_noise",
    "relay_transmit_power",
    "harvested_energy",
    "sinr_destination",
    "expected_sinr_eavesdropper",
    "sinr_eavesdropper_exact",
    "worst_case_secrecy_rate",
    "secrecy_rate_mc",
    "dbm_to_watts",
]


@dataclass(frozen=True)
class SystemParams:
    """Power budgets and noise levels, all in linear watts.

    ``num_eves`` may be zero, in which case secrecy reduces to the
    no-adversary destination rate.
    """

    p_s: float
    p_t: float
    p_min: float
    rho: float
    sigma2: float
    num_eves: int

    def __post_init__(self):
        if self.p_s <= 0 or self.p_t <= 0 or self.sigma2 <= 0:
            raise ValueError("p_s, p_t, and sigma2 must be positive")
        if self.p_min < 0:
            raise ValueError("p_min must be nonnegative")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if self.num_eves < 0:
            raise ValueError("num_eves must be nonnegative")


@dataclass(frozen=True)
class Eavesdropper:
    """One eavesdropper: estimated direction, link gain, and the robust
    covariance built around the estimate.  ``theta_true`` records the
    actual direction when known (simulation ground truth)."""

    theta_hat: float
    gain: float
    h_robust: RobustCovariance
    theta_true: float = None

    def __post_init__(self):
        if self.theta_true is None:
            object.__setattr__(self, "theta_true", self.theta_hat)


@dataclass(frozen=True)
class Scenario:
    """Geometry snapshot: the relay array and every link's steering data."""

    array: ArrayConfig
    h_sr: SteeringVector
    h_rd: SteeringVector
    h_rp: SteeringVector
    eaves: tuple
    error_model: AngleErrorModel

    def __post_init__(self):
        object.__setattr__(self, "eaves", tuple(self.eaves))
        n = self.array.num_antennas
        for vec in (self.h_sr, self.h_rd, self.h_rp):
            if vec.num_antennas != n:
                raise ValueError("steering vector length does not match the array")
        for eve in self.eaves:
            if eve.h_robust.num_antennas != n:
                raise ValueError("eavesdropper covariance does not match the array")

    @property
    def num_eves(self) -> int:
        return len(self.eaves)


@dataclass(frozen=True, eq=False)
class ProblemMatrices:
    """Kronecker-lifted coefficient matrices over w = vec(W).

    With left = conj(h_sr) h_sr^T and N the antenna count:

    - ``a1``  : kron(conj(h_sr), h_rd); A1 = a1 a1^H (rank one)
    - ``A1``  : destination signal quadratic |h_rd^H W h_sr|^2
    - ``A2``  : destination forwarded-noise quadratic
    - ``B1[m]``, ``B2[m]``: same pair through eavesdropper m's expected
      covariance (eigenvalue-floored copy, see ``eve_covs``)
    - ``C1``  : relay signal-power quadratic
    - ``D1``, ``D2``: energy-receiver signal and forwarded-noise quadratics

    ``eve_covs`` holds the floored covariances, consistent with B1/B2,
    for use in artificial-noise trace terms of the same constraints.
    Equality is identity-based so instances can key caches.
    """

    a1: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    B1: tuple
    B2: tuple
    C1: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    eve_covs: tuple
    h_rd_outer: np.ndarray
    h_rp_outer: np.ndarray

    @property
    def num_antennas(self) -> int:
        return self.h_rd_outer.shape[0]


@dataclass(frozen=True)
class BeamformingDesign:
    """Relay beamforming matrix and artificial-noise covariance.

    ``an_vector`` is set when the noise covariance is an outer product
    v v^H by construction (single-stream artificial noise).
    """

    W: np.ndarray
    Omega: np.ndarray
    an_vector: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.W, dtype=np.complex128)
        omega = np.asarray(self.Omega, dtype=np.complex128)
        w.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "Omega", omega)
        n = w.shape[0]
        if w.shape != (n, n) or omega.shape != (n, n):
            raise ValueError("W and Omega must be square and equally sized")
        scale = max(1.0, float(np.abs(omega).max(initial=0.0)))
        if np.abs(omega - omega.conj().T).max(initial=0.0) > 1e-9 * scale:
            raise ValueError("Omega must be Hermitian")
        trace = float(np.trace(omega).real)
        if np.linalg.eigvalsh(omega).min() < -1e-9 * max(trace, 1.0):
            raise ValueError("Omega must be positive semidefinite")
        if self.an_vector is not None:
            v = np.asarray(self.an_vector, dtype=np.complex128)
            v.setflags(write=False)
            object.__setattr__(self, "an_vector", v)
            residual = np.linalg.norm(omega - np.outer(v, v.conj()))
            if residual > 1e-9 * max(1.0, float(np.linalg.norm(omega))):
                raise ValueError("Omega does not match an_vector outer product")

    @property
    def num_antennas(self) -> int:
        return self.W.shape[0]


def dbm_to_watts(value_dbm: float) -> float:
    """Convert a dBm level to linear watts."""
    return float(10.0 ** ((value_dbm - 30.0) / 10.0))


def build_scenario(
    array: ArrayConfig,
    error_model: AngleErrorModel,
    theta_sr: float,
    gain_sr: float,
    theta_rd: float,
    gain_rd: float,
    theta_rp: float,
    gain_rp: float,
    eve_angles,
    eve_gains,
    eve_true_angles=None,
    perfect_csi: bool = False,
) -> Scenario:
    """Assemble a :class:`Scenario` from directions and link gains.

    With ``perfect_csi`` the eavesdropper covariances collapse to the
    nominal outer products h(theta_hat) h(theta_hat)^H, modeling exact
    knowledge of the estimated directions.
    """
    eve_angles = tuple(float(a) for a in eve_angles)
    eve_gains = tuple(float(g) for g in eve_gains)
    if len(eve_angles) != len(eve_gains):
        raise ValueError("eve_angles and eve_gains must have equal length")
    if eve_true_angles is None:
        eve_true_angles = eve_angles
    eve_true_angles = tuple(float(a) for a in eve_true_angles)
    if len(eve_true_angles) != len(eve_angles):
        raise ValueError("eve_true_angles must match eve_angles in length")
    eaves = []
    for theta, gain, theta_true in zip(eve_angles, eve_gains, eve_true_angles):
        if perfect_csi:
            h = steering_vector(array, theta, gain).entries
            matrix = np.outer(h, h.conj())
            np.fill_diagonal(matrix, gain / array.num_antennas)
            cov = RobustCovariance(matrix=matrix, source_angle=theta, gain=gain)
        else:
            cov = robust_covariance_analytic(array, theta, gain, error_model)
        eaves.append(Eavesdropper(theta_hat=theta, gain=gain, h_robust=cov, theta_true=theta_true))
    return Scenario(
        array=array,
        h_sr=steering_vector(array, theta_sr, gain_sr),
        h_rd=steering_vector(array, theta_rd, gain_rd),
        h_rp=steering_vector(array, theta_rp, gain_rp),
        eaves=tuple(eaves),
        error_model=error_model,
    )


def _floor_psd(matrix: np.ndarray) -> np.ndarray:
    """Clip eigenvalues from below at 1e-9 of the largest.

    A strictly positive floor keeps near-null leakage directions from
    destabilizing the conic solves; a zero matrix stays zero.
    """
    sym = 0.5 * (matrix + matrix.conj().T)
    w, v = np.linalg.eigh(sym)
    top = w.max()
    if top <= 0.0:
        return np.zeros_like(sym)
    w = np.maximum(w, 1e-9 * top)
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def build_problem_matrices(scenario: Scenario) -> ProblemMatrices:
    """Lift the scenario's steering data to vec(W) coefficient matrices."""
    n = scenario.array.num_antennas
    h_sr = scenario.h_sr.entries
    h_rd = scenario.h_rd.entries
    h_rp = scenario.h_rp.entries
    left = np.outer(h_sr.conj(), h_sr)
    h_rd_outer = np.outer(h_rd, h_rd.conj())
    h_rp_outer = np.outer(h_rp, h_rp.conj())
    eye = np.eye(n, dtype=np.complex128)
    a1 = np.kron(h_sr.conj(), h_rd)
    eve_covs = tuple(_floor_psd(eve.h_robust.matrix) for eve in scenario.eaves)
    return ProblemMatrices(
        a1=a1,
        A1=np.outer(a1, a1.conj()),
        A2=np.kron(eye, h_rd_outer),
        B1=tuple(np.kron(left, cov) for cov in eve_covs),
        B2=tuple(np.kron(eye, cov) for cov in eve_covs),
        C1=np.kron(left, eye),
        D1=np.kron(left, h_rp_outer),
        D2=np.kron(eye, h_rp_outer),
        eve_covs=eve_covs,
        h_rd_outer=h_rd_outer,
        h_rp_outer=h_rp_outer,
    )


def normalize_noise(params: SystemParams):
    """Rescale powers so the relay noise variance becomes 1.

    Returns the rescaled parameters and the original sigma2.  Beamforming
    matrices are unchanged by this scaling while noise covariances shrink
    by sigma2; every SINR, power, and harvest expression is invariant.
    Conic subproblems are assembled in these units to keep coefficient
    magnitudes within a few orders of each other.
    """
    s2 = params.sigma2
    scaled = SystemParams(
        p_s=params.p_s / s2,
        p_t=params.p_t / s2,
        p_min=params.p_min / s2,
        rho=params.rho,
        sigma2=1.0,
        num_eves=params.num_eves,
    )
    return scaled, s2


def _check_pair(scenario: Scenario, params: SystemParams):
    if scenario.num_eves != params.num_eves:
        raise ValueError(
            f"scenario has {scenario.num_eves} eavesdroppers, "
            f"params declare {params.num_eves}"
        )


def relay_transmit_power(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams
) -> float:
    """Total average relay transmit power: forwarded signal, forwarded
    relay noise, and artificial noise."""
    w_hsr = design.W @ scenario.h_sr.entries
    signal = params.p_s * float(np.vdot(w_hsr, w_hsr).real)
    noise = params.sigma2 * float(np.linalg.norm(design.W) ** 2)
    an = float(np.trace(design.Omega).real)
    return signal + noise + an


def harvested_energy(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams
) -> float:
    """Power harvested by the energy receiver, conversion efficiency included."""
    h_rp = scenario.h_rp.entries
    w_hsr = design.W @ scenario.h_sr.entries
    signal = params.p_s * abs(np.vdot(h_rp, w_hsr)) ** 2
    noise = params.sigma2 * float(np.linalg.norm(design.W.conj().T @ h_rp) ** 2)
    an = float(np.real(np.vdot(h_rp, design.Omega @ h_rp)))
    return params.rho * (signal + noise + an)


def scale_to_power_budget(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams
) -> BeamformingDesign:
    """Shrink a design that overshoots the relay budget back onto it.

    Transmit power is linear in (W W^H, Omega), so a single scalar restores
    the budget exactly.  Designs already within budget are returned as is.
    """
    power = relay_transmit_power(design, scenario, params)
    if power <= params.p_t:
        return design
    s = params.p_t / power
    return BeamformingDesign(W=design.W * np.sqrt(s), Omega=design.Omega * s)


def sinr_destination(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams
) -> float:
    """Destination SINR through the exact steering vector h(theta_rd)."""
    return _exact_sinr(design, scenario.h_rd.entries, scenario.h_sr.entries, params)


def _exact_sinr(design, h, h_sr, params):
    w_hsr = design.W @ h_sr
    signal = params.p_s * abs(np.vdot(h, w_hsr)) ** 2
    fwd_noise = params.sigma2 * float(np.linalg.norm(design.W.conj().T @ h) ** 2)
    an = float(np.real(np.vdot(h, design.Omega @ h)))
    return signal / (fwd_noise + an + params.sigma2)


def expected_sinr_eavesdropper(
    design: BeamformingDesign, scenario: Scenario, params: SystemParams, m: int
) -> float:
    """Approximate expected SINR at eavesdropper m (1-based index).

    Signal and interference powers are averaged over the direction error
    through the robust covariance H_m, numerator and denominator
    separately.
    """
    _check_pair(scenario, params)
    if not 1 <= m <= scenario.num_eves:
        raise ValueError(f"eavesdropper index {m} out of range")
    cov = scenario.eaves[m - 1].h_robust.matrix
    w_hsr = design.W @ scenario.h_sr.entries
    signal = params.p_s * float(np.real(np.vdot(w_hsr, cov @ w_hsr)))
    fwd_noise = params.sigma2 * float(np.real(np.trace(design.W.conj().T @ cov @ design.W)))
    an = float(np.real(np.trace(cov @ design.Omega)))
    return signal / (fwd_noise + an + params.sigma2)


def sinr_eavesdropper_exact(
    design: BeamformingDesign,
    scenario: Scenario,
    params: SystemParams,
    theta: float,
    gain: float,
) -> float:
    """SINR of a hypothetical eavesdropper exactly at ``theta``."""
    h = steering_vector(scenario.array, theta, gain).entries
    return _exact_sinr(design, h, scenario.h_sr.entries, params)


def worst_case_secrecy_rate(
    design: BeamformingDesign,
    scenario: Scenario,
    params: SystemParams,
    clamp: bool = True,
) -> float:
    """Secrecy rate against the strongest expected eavesdropper.

    Half the rate difference between the destination and the worst of
    the M expected eavesdropper rates; the half accounts for the
    two-slot protocol.  Clamped at zero unless ``clamp`` is false.
    """
    _check_pair(scenario, params)
    dest = 0.5 * np.log2(1.0 + sinr_destination(design, scenario, params))
    worst = 0.0
    for m in range(1, scenario.num_eves + 1):
        s = expected_sinr_eavesdropper(design, scenario, params, m)
        worst = max(worst, 0.5 * np.log2(1.0 + s))
    rate = float(dest - worst)
    if clamp:
        return max(0.0, rate)
    return rate


def secrecy_rate_mc(
    design: BeamformingDesign,
    scenario: Scenario,
    params: SystemParams,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Secrecy rate with eavesdropper rates averaged over direction draws.

    For each eavesdropper the achievable rate log2(1 + SINR) is averaged
    over ``samples`` draws of the true direction around the estimate;
    the worst averaged eavesdropper is subtracted from the destination
    rate and the difference clamped at zero.
    """
    from .array_channel import sample_angle_error

    _check_pair(scenario, params)
    dest = 0.5 * np.log2(1.0 + sinr_destination(design, scenario, params))
    worst = 0.0
    for eve in scenario.eaves:
        errors = np.atleast_1d(sample_angle_error(scenario.error_model, rng, size=samples))
        rates = np.empty(errors.shape[0])
        for i, err in enumerate(errors):
            s = sinr_eavesdropper_exact(design, scenario, params, eve.theta_hat + err, eve.gain)
            rates[i] = 0.5 * np.log2(1.0 + s)
        worst = max(worst, float(rates.mean()))
    return max(0.0, float(dest - worst))
