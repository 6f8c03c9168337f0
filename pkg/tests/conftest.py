"""Shared fixtures: reference scenarios, precomputed designs, and the
acceptance-summary reporting hook."""
import numpy as np
import pytest

from dmswipt.array_channel import AngleErrorModel, ArrayConfig, path_loss
from dmswipt.baseline_zf import zf_design
from dmswipt.cli import RunConfig, scenario_from_config, _scheme_options
from dmswipt.design_sca import sca_design
from dmswipt.design_slanr import slanr_design
from dmswipt.design_srm1d import srm_1d_design
from dmswipt.system_model import SystemParams, build_scenario

ACCEPTANCE_LINES = []


def record_acceptance(index, passed, detail):
    """Register one acceptance-summary line; returns passed for chaining."""
    tag = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{tag}] criterion {index}: {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance summary")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table_n6():
    """Reference six-antenna scenario at the default operating point."""
    return scenario_from_config(RunConfig())


@pytest.fixture(scope="session")
def table_n4():
    """Four-antenna variant with a relaxed harvest floor; the continuous
    integration workhorse."""
    return scenario_from_config(RunConfig(n_antennas=4, pmin_dbm=5.0))


@pytest.fixture(scope="session")
def options_n4():
    return _scheme_options(RunConfig(n_antennas=4, pmin_dbm=5.0, beta_grid_points=33))


@pytest.fixture(scope="session")
def srm1d_n4(table_n4, options_n4):
    scenario, params = table_n4
    return srm_1d_design(scenario, params, options_n4.srm1d)


@pytest.fixture(scope="session")
def slanr_n4(table_n4, options_n4):
    scenario, params = table_n4
    return slanr_design(scenario, params, options_n4.slanr)


@pytest.fixture(scope="session")
def sca_n4(table_n4, options_n4):
    scenario, params = table_n4
    return sca_design(scenario, params, options_n4.sca)


@pytest.fixture(scope="session")
def zf_n4(table_n4, options_n4):
    scenario, params = table_n4
    return zf_design(scenario, params, options_n4.zf)


def family_scenario(seed, num_antennas):
    """Randomized member of the reference-geometry family.

    Angles jitter around the defaults, distances draw from 60..100 m, and
    the harvest floor drops to 0 dBm so every member stays feasible.
    """
    rng = np.random.default_rng(seed)
    array = ArrayConfig(num_antennas=num_antennas, element_spacing=0.5, wavelength=1.0)
    model = AngleErrorModel.from_ke(np.deg2rad(6.0), 0.9)

    def jitter(base_deg, spread_deg):
        return np.deg2rad(base_deg + rng.uniform(-spread_deg, spread_deg))

    def gain():
        return path_loss(rng.uniform(60.0, 100.0), 10.0)

    scenario = build_scenario(
        array,
        model,
        jitter(-70.0, 10.0),
        gain(),
        jitter(90.0, 10.0),
        gain(),
        jitter(45.0, 10.0),
        gain(),
        [jitter(60.0, 8.0), jitter(110.0, 8.0)],
        [gain(), gain()],
    )
    params = SystemParams(
        p_s=1.0, p_t=1.0, p_min=1e-3, rho=0.8, sigma2=1e-4, num_eves=2
    )
    return scenario, params


@pytest.fixture
def scenario_factory():
    return family_scenario
