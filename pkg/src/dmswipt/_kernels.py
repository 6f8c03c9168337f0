"""Hot numeric kernels with numba acceleration and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``DMSWIPT_NO_NUMBA`` is unset/empty; set ``DMSWIPT_NO_NUMBA=1`` to
force the numpy path.  Both paths consume identical pre-drawn random inputs,
so results agree to floating-point roundoff regardless of the switch.
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised indirectly via dispatch tests
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


def use_numba() -> bool:
    """True when the accelerated path is active for this call."""
    return HAVE_NUMBA and not os.environ.get("DMSWIPT_NO_NUMBA")


# ---------------------------------------------------------------------------
# Monte Carlo steering covariance: mean of h(theta_s) h(theta_s)^H over angle
# draws.  thetas are the already-sampled realized angles (radians).
# ---------------------------------------------------------------------------

def _steering_phases(thetas, num_elements, spacing_over_wavelength):
    n = np.arange(1, num_elements + 1)
    centered = n - (num_elements + 1) / 2.0
    return -2.0 * np.pi * spacing_over_wavelength * np.outer(centered, np.cos(thetas))


def mc_covariance_numpy(thetas, num_elements, spacing_over_wavelength, gain):
    phases = _steering_phases(thetas, num_elements, spacing_over_wavelength)
    amp = np.sqrt(gain / num_elements)
    A = amp * np.exp(1j * phases)
    return (A @ A.conj().T) / thetas.size


@njit(cache=True)
def _mc_covariance_jit(cos_thetas, num_elements, spacing_over_wavelength, gain):  # pragma: no cover
    acc = np.zeros((num_elements, num_elements), dtype=np.complex128)
    amp = np.sqrt(gain / num_elements)
    half = (num_elements + 1) / 2.0
    h = np.empty(num_elements, dtype=np.complex128)
    for s in range(cos_thetas.size):
        c = cos_thetas[s]
        for n in range(num_elements):
            ph = -2.0 * np.pi * spacing_over_wavelength * ((n + 1) - half) * c
            h[n] = amp * (np.cos(ph) + 1j * np.sin(ph))
        for p in range(num_elements):
            hp = h[p]
            for q in range(num_elements):
                acc[p, q] += hp * np.conj(h[q])
    return acc / cos_thetas.size


def mc_covariance(thetas, num_elements, spacing_over_wavelength, gain):
    """Sample covariance of the steering vector over realized angles."""
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    if use_numba():
        return _mc_covariance_jit(np.cos(thetas), num_elements,
                                  float(spacing_over_wavelength), float(gain))
    return mc_covariance_numpy(thetas, num_elements, spacing_over_wavelength, gain)


# ---------------------------------------------------------------------------
# QPSK bit-error counting for the relayed chain.  The caller pre-draws the
# symbol bits and every noise innovation; the kernel runs the per-symbol
# receive chain and counts Gray-mapped bit errors.
#
#   y[s] = g_eff * x[s] + u_relay . n_r[:, s] + u_an . v[:, s] + n0[s]
#
# where x[s] is the unit-energy QPSK symbol for bit pair
# (bits[2s], bits[2s+1]) mapped as ((1-2*b0) + 1j*(1-2*b1)) / sqrt(2).
# ---------------------------------------------------------------------------

def qpsk_ber_numpy(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx):
    b0 = bits[0::2].astype(np.float64)
    b1 = bits[1::2].astype(np.float64)
    x = ((1.0 - 2.0 * b0) + 1j * (1.0 - 2.0 * b1)) / np.sqrt(2.0)
    y = g_eff * x + u_relay @ noise_relay + u_an @ noise_an + noise_rx
    if abs(g_eff) < 1e-15:
        return 0.5
    z = y / g_eff
    dec0 = (z.real < 0.0).astype(np.uint8)
    dec1 = (z.imag < 0.0).astype(np.uint8)
    errors = np.count_nonzero(dec0 != bits[0::2]) + np.count_nonzero(dec1 != bits[1::2])
    return errors / bits.size


@njit(cache=True)
def _qpsk_ber_jit(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx):  # pragma: no cover
    num_symbols = bits.size // 2
    if abs(g_eff) < 1e-15:
        return 0.5
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    errors = 0
    for s in range(num_symbols):
        b0 = bits[2 * s]
        b1 = bits[2 * s + 1]
        x = complex((1.0 - 2.0 * b0) * inv_sqrt2, (1.0 - 2.0 * b1) * inv_sqrt2)
        acc = g_eff * x + noise_rx[s]
        for n in range(u_relay.size):
            acc += u_relay[n] * noise_relay[n, s] + u_an[n] * noise_an[n, s]
        z = acc / g_eff
        if (z.real < 0.0) != (b0 == 1):
            errors += 1
        if (z.imag < 0.0) != (b1 == 1):
            errors += 1
    return errors / bits.size


def qpsk_ber(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx):
    """Bit error rate of the coherent Gray-mapped QPSK chain."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if use_numba():
        return _qpsk_ber_jit(bits, complex(g_eff),
                             np.ascontiguousarray(u_relay, dtype=np.complex128),
                             np.ascontiguousarray(u_an, dtype=np.complex128),
                             np.ascontiguousarray(noise_relay, dtype=np.complex128),
                             np.ascontiguousarray(noise_an, dtype=np.complex128),
                             np.ascontiguousarray(noise_rx, dtype=np.complex128))
    return qpsk_ber_numpy(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx)
