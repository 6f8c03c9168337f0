"""Zero-forcing baseline: null the estimated eavesdropper directions.

The beamformer forwards the source signal toward the destination through
the orthogonal complement of the estimated eavesdropper steering
directions, and sends a single artificial-noise stream inside their span
(kept orthogonal to the destination) pointed as close to the energy
receiver as the span allows.  Only the power split between the two parts
is searched; everything else is closed form, so this baseline needs no
conic solver at all.  It ignores the direction uncertainty, which is
exactly why the robust designs beat it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system_model import (
    BeamformingDesign,
    Scenario,
    SystemParams,
    _check_pair,
    harvested_energy,
    worst_case_secrecy_rate,
)

__all__ = ["ZfOptions", "ZfResult", "zf_design"]


@dataclass(frozen=True)
class ZfOptions:
    """``alpha`` fixes the fraction of the power budget spent on the
    information beam; None searches for the largest feasible fraction."""

    alpha: float = None

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class ZfResult:
    """Design plus how the power split was resolved.

    ``degenerate`` marks geometries where zero forcing cannot carry
    information (at least as many eavesdroppers as antennas, or the
    destination direction inside the nulled span); the design is then
    all zero.  ``harvest_met`` is false when no split reaches the
    harvest floor; the reported rate is zero in that case and ``status``
    says ``harvest_shortfall``.
    """

    design: BeamformingDesign
    rate: float
    alpha: float
    degenerate: bool
    harvest_met: bool
    status: str


def _zero_result(n: int, p_min: float) -> ZfResult:
    design = BeamformingDesign(
        W=np.zeros((n, n), dtype=np.complex128),
        Omega=np.zeros((n, n), dtype=np.complex128),
        an_vector=np.zeros(n, dtype=np.complex128),
    )
    return ZfResult(
        design=design,
        rate=0.0,
        alpha=0.0,
        degenerate=True,
        harvest_met=p_min <= 0.0,
        status="degenerate",
    )


def zf_design(
    scenario: Scenario, params: SystemParams, options: ZfOptions = None
) -> ZfResult:
    """Construct the zero-forcing design for the estimated directions.

    With M = 0 the projector is the identity and the design reduces to a
    pure matched beam with no artificial noise.  With M >= N the nulled
    span swallows every information direction, so a flagged zero-rate
    design is returned rather than an exception: the baseline is
    routinely swept into that regime for comparison plots.
    """
    options = options or ZfOptions()
    _check_pair(scenario, params)
    n = scenario.array.num_antennas
    m = scenario.num_eves
    if m >= n:
        return _zero_result(n, params.p_min)
    h_sr = scenario.h_sr.entries
    h_rd = scenario.h_rd.entries
    h_rp = scenario.h_rp.entries

    if m == 0:
        projector = np.eye(n, dtype=np.complex128)
    else:
        eve_matrix = np.column_stack(
            [
                np.asarray(
                    _eve_steering(scenario, idx), dtype=np.complex128
                )
                for idx in range(m)
            ]
        )
        gram_inv = np.linalg.pinv(eve_matrix.conj().T @ eve_matrix, rcond=1e-10)
        projector = np.eye(n, dtype=np.complex128) - eve_matrix @ gram_inv @ eve_matrix.conj().T

    projected_rd = projector @ h_rd
    w_dir = np.outer(projected_rd, h_sr.conj())
    base_power = params.p_s * float(
        np.linalg.norm(w_dir @ h_sr) ** 2
    ) + params.sigma2 * float(np.linalg.norm(w_dir) ** 2)
    if base_power <= 1e-30:
        return _zero_result(n, params.p_min)

    v_dir = _an_direction(scenario, m, h_rd, h_rp)

    def point_design(alpha: float) -> BeamformingDesign:
        w = np.sqrt(alpha * params.p_t / base_power) * w_dir
        if v_dir is None:
            v = np.zeros(n, dtype=np.complex128)
        else:
            v = np.sqrt((1.0 - alpha) * params.p_t) * v_dir
        return BeamformingDesign(W=w, Omega=np.outer(v, v.conj()), an_vector=v)

    def harvest(alpha: float) -> float:
        return harvested_energy(point_design(alpha), scenario, params)

    if options.alpha is not None:
        alpha = options.alpha
        met = harvest(alpha) >= params.p_min * (1.0 - 1e-9)
    elif v_dir is None:
        # No noise subspace: any alpha below 1 just strands power.
        alpha = 1.0
        met = harvest(alpha) >= params.p_min * (1.0 - 1e-9)
    elif harvest(1.0) >= params.p_min:
        alpha = 1.0
        met = True
    elif harvest(0.0) < params.p_min:
        # Harvest is linear in alpha, so the endpoints bound it; pick the
        # better one for inspection even though the floor is unreachable.
        alpha = 1.0 if harvest(1.0) > harvest(0.0) else 0.0
        met = False
    else:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if harvest(mid) >= params.p_min:
                lo = mid
            else:
                hi = mid
        alpha = lo
        met = True

    design = point_design(alpha)
    if not met:
        return ZfResult(
            design=design,
            rate=0.0,
            alpha=alpha,
            degenerate=False,
            harvest_met=False,
            status="harvest_shortfall",
        )
    rate = worst_case_secrecy_rate(design, scenario, params)
    return ZfResult(
        design=design,
        rate=rate,
        alpha=alpha,
        degenerate=False,
        harvest_met=True,
        status="optimal",
    )


def _eve_steering(scenario: Scenario, idx: int) -> np.ndarray:
    from .array_channel import steering_vector

    eve = scenario.eaves[idx]
    return steering_vector(scenario.array, eve.theta_hat, eve.gain).entries


def _an_direction(scenario, m, h_rd, h_rp):
    """Unit vector in span(eve directions), orthogonal to h_rd, closest
    to the energy receiver direction; None when that space is empty."""
    if m == 0:
        return None
    eve_matrix = np.column_stack([_eve_steering(scenario, idx) for idx in range(m)])
    q = h_rd / np.linalg.norm(h_rd)
    deflated = eve_matrix - np.outer(q, q.conj() @ eve_matrix)
    u, s, _ = np.linalg.svd(deflated, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return None
    keep = s > 1e-10 * s[0]
    if not np.any(keep):
        return None
    basis = u[:, keep]
    v = basis @ (basis.conj().T @ h_rp)
    norm = np.linalg.norm(v)
    if norm <= 1e-12 * np.linalg.norm(h_rp):
        v = basis[:, 0]
        norm = 1.0
    return v / norm
