import numpy as np
import pytest

from ambc_v2x.channel import ChannelRealization, generate_batch
from ambc_v2x.config import NetworkConfig


@pytest.fixture
def config():
    return NetworkConfig()


@pytest.fixture
def batch(config):
    return generate_batch(config, 40)


def make_channel(g_bs=(3e-6, 1e-6), g_veh=((2e-5, 4e-6), (1e-5, 3e-6)), g_tag=((1e-2, 1e-2), (1e-2, 1e-2)),
                 g_rt=(1e-3, 1e-3), g_cross=((1e-9, 1e-9), (1e-9, 1e-9)), sigma_eps_sq=0.0, noise_w=1e-14):
    """Hand-built single realization with ordered gains."""
    return ChannelRealization(np.array(g_bs, float), np.array(g_veh, float), np.array(g_tag, float),
                              np.array(g_rt, float), np.array(g_cross, float), sigma_eps_sq, noise_w)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
