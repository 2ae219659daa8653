import dataclasses

import numpy as np
import pytest

from lambdadet.config import parse_config
from lambdadet.dressed import fit_drive_calibration

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def cfg():
    return parse_config("")


@pytest.fixture(scope="session")
def params(cfg):
    """Bundled device constants with the fitted dBm calibration."""
    base = cfg.params
    return base.with_calibration(fit_drive_calibration(base))


@pytest.fixture(scope="session")
def omega_d(cfg):
    return cfg.omega_d


@pytest.fixture(scope="session")
def clean_params(params):
    """Device without initialization floor or drive-line noise."""
    return dataclasses.replace(
        params,
        init_excited_pop=0.0,
        drive_noise_per_rabi2=0.0,
        drive_dephasing_per_rabi2=0.0,
    )
