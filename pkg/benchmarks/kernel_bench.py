"""Timing comparison of the jit-compiled kernels against pure numpy.

Runs the Monte Carlo covariance accumulation and the QPSK error counter
through both code paths in one process, toggling DMSWIPT_NO_NUMBA
around the calls.  The first jit call is excluded from timing (it
compiles).  Run as: python benchmarks/kernel_bench.py
"""
import os
import time

import numpy as np

from dmswipt._kernels import mc_covariance, qpsk_ber, use_numba


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    rng = np.random.default_rng(7)
    num_elements = 6
    samples = 100000

    thetas = rng.uniform(0.0, np.pi, samples)
    symbols = 100000
    bits = rng.integers(0, 2, size=2 * symbols, dtype=np.uint8)
    u_relay = (rng.standard_normal(num_elements) + 1j * rng.standard_normal(num_elements)) / 4
    u_an = (rng.standard_normal(num_elements) + 1j * rng.standard_normal(num_elements)) / 4
    noise_relay = (
        rng.standard_normal((num_elements, symbols))
        + 1j * rng.standard_normal((num_elements, symbols))
    ) / np.sqrt(2)
    noise_an = (
        rng.standard_normal((num_elements, symbols))
        + 1j * rng.standard_normal((num_elements, symbols))
    ) / np.sqrt(2)
    noise_rx = (rng.standard_normal(symbols) + 1j * rng.standard_normal(symbols)) / np.sqrt(2)
    g_eff = 2.0 + 0.5j

    def run_cov():
        return mc_covariance(thetas, num_elements, 0.5, 1.0 / 64.0)

    def run_ber():
        return qpsk_ber(bits, g_eff, u_relay, u_an, noise_relay, noise_an, noise_rx)

    results = {}
    for label, flag in (("numpy", "1"), ("numba", "")):
        if flag:
            os.environ["DMSWIPT_NO_NUMBA"] = flag
        else:
            os.environ.pop("DMSWIPT_NO_NUMBA", None)
            if not use_numba():
                print("numba unavailable; skipping jit timings")
                continue
            run_cov()
            run_ber()
        results[label] = (_time(run_cov), _time(run_ber))

    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for idx, kernel in enumerate(("mc_covariance", "qpsk_ber")):
        np_t = results["numpy"][idx]
        row = f"{kernel:<16}{np_t * 1e3:>12.2f}"
        if "numba" in results:
            nb_t = results["numba"][idx]
            row += f"{nb_t * 1e3:>12.2f}{np_t / nb_t:>10.2f}x"
        print(row)


if __name__ == "__main__":
    main()
