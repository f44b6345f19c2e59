import numpy as np
import pytest

from felgame import (DeviceParams, GameConfig, ParameterSampler, ServerParams,
                     sample_config)


def reference_server(n: int = 8) -> ServerParams:
    """Fixed server block of the evaluation setup (per-device send cost 1)."""
    return ServerParams(alpha=5.0, beta=2.0, rho=float(n),
                        w=10.0, r=10.0, t=5.0, k=13.2, a=0.7)


def make_device(alpha=2.4, beta=1.0, psi_hi=1.9, psi_lo=0.6,
                spared_income=0.5, delta=0.018, data_size=750.0) -> DeviceParams:
    return DeviceParams(alpha=alpha, beta=beta, psi_hi=psi_hi, psi_lo=psi_lo,
                        lam=spared_income / (1.0 - delta), delta=delta,
                        data_size=data_size)


@pytest.fixture(scope="session")
def reference_config() -> GameConfig:
    """Eight mildly heterogeneous devices against the fixed server block.

    Every device passes the participation check and keeps all conditional
    payoffs positive at extortion factor 1.
    """
    devices = tuple(
        make_device(alpha=2.2 + 0.08 * i, beta=0.8 + 0.1 * i,
                    psi_hi=1.95 - 0.03 * i, psi_lo=0.4 + 0.05 * i,
                    spared_income=0.3 + 0.06 * i)
        for i in range(8)
    )
    return GameConfig(devices=devices, server=reference_server())


@pytest.fixture(scope="session")
def small_config() -> GameConfig:
    """Two devices, total data kept at 6000 so profit extremes match."""
    devices = (
        make_device(alpha=2.8, beta=0.9, psi_hi=1.9, psi_lo=0.3,
                    spared_income=0.4, data_size=3000.0),
        make_device(alpha=2.5, beta=1.1, psi_hi=1.7, psi_lo=0.5,
                    spared_income=0.6, data_size=3000.0),
    )
    return GameConfig(devices=devices, server=reference_server(n=2))


@pytest.fixture(scope="session")
def sampled_config() -> GameConfig:
    """A config drawn through the production sampler at a fixed seed."""
    rng = np.random.default_rng(2024)
    return sample_config(ParameterSampler(payoff_floor=0.0),
                         [1.0, 2.0, 3.0, 4.0], rng).config
