"""Uniform linear array geometry and the statistics of imperfect
direction estimates.

Angles are radians everywhere in this module.  A steering vector toward
angle theta carries the full amplitude gain of its link, so that
||h(theta)||^2 equals the path loss g of that link.  Direction
estimation errors follow a Gaussian truncated to
[-delta_theta_max, +delta_theta_max] and renormalized by the coverage
probability k_e.  The expected steering outer product under that error
law has a closed second-order form, evaluated by
``robust_covariance_analytic`` and cross-checkable by Monte Carlo via
``robust_covariance_mc``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfinv

from ._kernels import mc_covariance

__all__ = [
    "ArrayConfig",
    "AngleErrorModel",
    "SteeringVector",
    "RobustCovariance",
    "steering_vector",
    "path_loss",
    "truncated_gaussian_pdf",
    "sigma_from_ke",
    "sample_angle_error",
    "robust_covariance_analytic",
    "robust_covariance_mc",
]

# Beyond ~10 degrees the second-order expansion behind the closed-form
# covariance starts to drift visibly from the Monte Carlo truth.
_EXPANSION_WARN_RAD = np.deg2rad(10.0)


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array description.

    Parameters
    ----------
    num_antennas : int
        Element count N, at least 1.
    element_spacing : float, optional
        Inter-element spacing l.  Defaults to half the wavelength.
    wavelength : float, optional
        Carrier wavelength, default 1.0 (only the ratio l/wavelength
        enters any formula).
    """

    num_antennas: int
    element_spacing: float = None
    wavelength: float = 1.0

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be at least 1")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.element_spacing is None:
            object.__setattr__(self, "element_spacing", self.wavelength / 2.0)
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")

    @property
    def spacing_over_wavelength(self) -> float:
        return self.element_spacing / self.wavelength


@dataclass(frozen=True)
class AngleErrorModel:
    """Truncated Gaussian law for the direction estimation error.

    The error density is a zero-mean Gaussian with scale ``sigma_theta``
    restricted to ``[-delta_theta_max, +delta_theta_max]`` and divided by
    ``k_e``, the probability mass the untruncated Gaussian puts on that
    window.  The three fields are therefore linked; construction rejects
    inconsistent triples.  Use :meth:`from_ke` or :meth:`from_sigma` to
    build consistent instances.
    """

    delta_theta_max: float
    sigma_theta: float
    k_e: float

    def __post_init__(self):
        if self.delta_theta_max <= 0:
            raise ValueError("delta_theta_max must be positive")
        if self.sigma_theta <= 0:
            raise ValueError("sigma_theta must be positive")
        if not 0.0 < self.k_e <= 1.0:
            raise ValueError("k_e must lie in (0, 1]")
        implied = float(erf(self.delta_theta_max / (np.sqrt(2.0) * self.sigma_theta)))
        if abs(implied - self.k_e) > 1e-9:
            raise ValueError(
                f"inconsistent error model: window mass is {implied!r}, "
                f"stated k_e is {self.k_e!r}"
            )

    @classmethod
    def from_ke(cls, delta_theta_max: float, k_e: float) -> "AngleErrorModel":
        """Solve for the Gaussian scale that places mass k_e on the window."""
        sigma = sigma_from_ke(delta_theta_max, k_e)
        k_exact = float(erf(delta_theta_max / (np.sqrt(2.0) * sigma)))
        return cls(delta_theta_max, sigma, k_exact)

    @classmethod
    def from_sigma(cls, delta_theta_max: float, sigma_theta: float) -> "AngleErrorModel":
        """Derive the window mass from a given Gaussian scale."""
        if sigma_theta <= 0:
            raise ValueError("sigma_theta must be positive")
        k_e = float(erf(delta_theta_max / (np.sqrt(2.0) * sigma_theta)))
        return cls(delta_theta_max, sigma_theta, k_e)


@dataclass(frozen=True)
class SteeringVector:
    """Array response toward one direction, scaled by its link gain."""

    entries: np.ndarray
    gain: float
    angle: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.gain < 0:
            raise ValueError("gain must be nonnegative")
        norm_sq = float(np.vdot(entries, entries).real)
        if abs(norm_sq - self.gain) > 1e-12 * max(1.0, self.gain):
            raise ValueError("steering vector norm does not match its gain")

    @property
    def num_antennas(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class RobustCovariance:
    """Expected steering outer product under direction uncertainty."""

    matrix: np.ndarray
    source_angle: float
    gain: float

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.complex128)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        n = matrix.shape[0]
        if matrix.shape != (n, n):
            raise ValueError("covariance must be square")
        scale = max(1.0, float(np.abs(matrix).max(initial=0.0)))
        if np.abs(matrix - matrix.conj().T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("covariance must be Hermitian")
        trace = float(np.trace(matrix).real)
        if np.linalg.eigvalsh(matrix).min() < -1e-9 * max(trace, 1e-300):
            raise ValueError("covariance must be positive semidefinite")
        diag_target = self.gain / n
        if np.any(matrix.diagonal() != diag_target):
            raise ValueError("covariance diagonal must equal gain/N exactly")

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]


def steering_vector(array: ArrayConfig, theta: float, gain: float) -> SteeringVector:
    """Array response h(theta) with squared norm equal to ``gain``.

    Element n (1-based) carries phase
    ``-2 pi (n - (N+1)/2) (l/wavelength) cos(theta)`` so the phase
    reference sits at the array centroid.
    """
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    n = array.num_antennas
    idx = np.arange(1, n + 1, dtype=np.float64)
    phase = -2.0 * np.pi * array.spacing_over_wavelength * (idx - (n + 1) / 2.0) * np.cos(theta)
    entries = np.sqrt(gain / n) * np.exp(1j * phase)
    return SteeringVector(entries=entries, gain=float(gain), angle=float(theta))


def path_loss(distance: float, reference_distance: float = 10.0) -> float:
    """Inverse-square power gain (d / d0)^-2."""
    if distance <= 0 or reference_distance <= 0:
        raise ValueError("distances must be positive")
    return float((distance / reference_distance) ** -2.0)


def truncated_gaussian_pdf(delta_theta, model: AngleErrorModel):
    """Density of the direction error; zero outside the truncation window."""
    x = np.asarray(delta_theta, dtype=np.float64)
    core = np.exp(-0.5 * (x / model.sigma_theta) ** 2)
    core /= model.k_e * np.sqrt(2.0 * np.pi) * model.sigma_theta
    out = np.where(np.abs(x) <= model.delta_theta_max, core, 0.0)
    if np.isscalar(delta_theta):
        return float(out)
    return out


def sigma_from_ke(delta_theta_max: float, k_e: float) -> float:
    """Gaussian scale whose mass on [-delta, +delta] equals k_e.

    Solved by bisection on the strictly decreasing map
    sigma -> erf(delta / (sqrt(2) sigma)) to an absolute width of 1e-12.
    """
    if delta_theta_max <= 0:
        raise ValueError("delta_theta_max must be positive")
    if not 0.0 < k_e < 1.0:
        raise ValueError("no finite sigma: k_e must lie strictly inside (0, 1)")
    lo = 1e-300
    hi = delta_theta_max
    while erf(delta_theta_max / (np.sqrt(2.0) * hi)) > k_e:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("no finite sigma found for the requested k_e")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if erf(delta_theta_max / (np.sqrt(2.0) * mid)) > k_e:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_angle_error(model: AngleErrorModel, rng: np.random.Generator, size=None):
    """Draw direction errors by inverse-CDF transform of uniforms.

    Every sample lies inside [-delta_theta_max, +delta_theta_max].
    """
    u = rng.random(size)
    x = np.sqrt(2.0) * model.sigma_theta * erfinv(model.k_e * (2.0 * u - 1.0))
    # Exact support clamp; also absorbs the k_e == 1 endpoint where
    # erfinv(+-1) is infinite.
    x = np.clip(x, -model.delta_theta_max, model.delta_theta_max)
    if size is None:
        return float(x)
    return x


def _project_psd_fixed_diag(matrix: np.ndarray, diag_value: float) -> np.ndarray:
    """Nearest matrix in {PSD} intersect {diagonal == diag_value}.

    Alternating projections with a Dykstra correction on the PSD step.
    The closed-form covariance can dip a few 1e-6 below zero in its
    smallest eigenvalue; this restores feasibility while preserving the
    exact diagonal.
    """
    x = np.array(matrix, dtype=np.complex128)
    x = 0.5 * (x + x.conj().T)
    n = x.shape[0]
    trace_scale = max(abs(n * diag_value), 1e-300)
    correction = np.zeros_like(x)
    for _ in range(500):
        w, v = np.linalg.eigh(x - correction)
        x_psd = (v * np.maximum(w, 0.0)) @ v.conj().T
        correction = x_psd - (x - correction)
        x = x_psd.copy()
        np.fill_diagonal(x, diag_value)
        if np.linalg.eigvalsh(x).min() >= -1e-13 * trace_scale:
            break
    x = 0.5 * (x + x.conj().T)
    np.fill_diagonal(x, diag_value)
    return x


def robust_covariance_analytic(
    array: ArrayConfig, theta_hat: float, gain: float, model: AngleErrorModel
) -> RobustCovariance:
    """Closed-form expected steering outer product E[h h^H].

    A second-order expansion of the element phases in the direction
    error yields, per entry (p, q) with alpha = 2 pi (q - p) l / wavelength,

        H[p, q] = (g/N) exp(j alpha cos(theta_hat)) (c1 - j c2),
        c1 = (E - alpha^2 sin^2(theta_hat) sigma^2 J) / k_e,
        c2 = alpha cos(theta_hat) sigma^2 J / k_e,

    where E is the Gaussian mass on the truncation window and J its
    second-moment companion.  The result is projected onto the PSD cone
    with the diagonal pinned at exactly g/N.
    """
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    if model.delta_theta_max > _EXPANSION_WARN_RAD:
        warnings.warn(
            "delta_theta_max exceeds 10 degrees; the second-order "
            "covariance expansion may be inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    n = array.num_antennas
    sigma = model.sigma_theta
    delta = model.delta_theta_max
    idx = np.arange(1, n + 1, dtype=np.float64)
    alpha = 2.0 * np.pi * array.spacing_over_wavelength * (idx[None, :] - idx[:, None])
    mass = float(erf(delta / (np.sqrt(2.0) * sigma)))
    j_term = 0.5 * mass - (delta / (np.sqrt(2.0 * np.pi) * sigma)) * np.exp(
        -0.5 * (delta / sigma) ** 2
    )
    cos_t = np.cos(theta_hat)
    sin_t = np.sin(theta_hat)
    c1 = (mass - alpha**2 * sin_t**2 * sigma**2 * j_term) / model.k_e
    c2 = alpha * cos_t * sigma**2 * j_term / model.k_e
    nominal = (gain / n) * np.exp(1j * alpha * cos_t)
    matrix = nominal * (c1 - 1j * c2)
    matrix = _project_psd_fixed_diag(matrix, gain / n)
    return RobustCovariance(matrix=matrix, source_angle=float(theta_hat), gain=float(gain))


def robust_covariance_mc(
    array: ArrayConfig,
    theta_hat: float,
    gain: float,
    model: AngleErrorModel,
    samples: int,
    rng: np.random.Generator,
) -> RobustCovariance:
    """Monte Carlo estimate of E[h h^H] under the error law.

    Averages steering outer products over ``samples`` inverse-CDF draws.
    The estimate is Hermitized and its diagonal pinned at exactly g/N
    (each sample's diagonal already equals g/N up to roundoff).
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    errors = np.atleast_1d(sample_angle_error(model, rng, size=samples))
    matrix = mc_covariance(
        theta_hat + errors, array.num_antennas, array.spacing_over_wavelength, gain
    )
    matrix = 0.5 * (matrix + matrix.conj().T)
    np.fill_diagonal(matrix, gain / array.num_antennas)
    return RobustCovariance(matrix=matrix, source_angle=float(theta_hat), gain=float(gain))
