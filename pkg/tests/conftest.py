"""Shared fixtures: a runnable synthetic scenario and the bundled example."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from gsisio.config import EXAMPLE_CONFIG, parse_scenario, build_model
from gsisio.simulate import run_observer, simulate_ground_truth

SYNTHETIC_CONFIG = """\
# Runnable reference scenario: full-rank feedthrough, contractive gains.
f1 = "0.4*x1 + 0.1*sin(x2)"
f2 = "0.3*x2 + 0.1*cos(x1)"
g1 = "0.8*x1 + 0.1*sin(x2)"
g2 = "0.5*x2 + 0.05*sin(x1)"

B = [[0.1], [0.05]]
D = [[0.02], [0.01]]
G = [[0.15], [0.08]]
H = [[0.6], [-0.9]]

w_lower = [-0.05, -0.05]
w_upper = [0.05, 0.05]
v_lower = [-0.05, -0.05]
v_upper = [0.05, 0.05]
x0_lower = [-1.0, -1.0]
x0_upper = [1.0, 1.0]

jacobian_f_lower = [[0.4, -0.1], [-0.1, 0.3]]
jacobian_f_upper = [[0.4, 0.1], [0.1, 0.3]]
jacobian_g_lower = [[0.8, -0.1], [-0.05, 0.5]]
jacobian_g_upper = [[0.8, 0.1], [0.05, 0.5]]

u1 = "sin(0.05*k)"
d1 = "0.8*sin(0.15*k) + 0.3"

horizon = 200
seed = 0
bounding = "corollary"
"""


@pytest.fixture(scope="session")
def synthetic_text() -> str:
    return SYNTHETIC_CONFIG


@pytest.fixture(scope="session")
def synthetic_cfg():
    return parse_scenario(SYNTHETIC_CONFIG)


@pytest.fixture(scope="session")
def synthetic_model(synthetic_cfg):
    return build_model(synthetic_cfg)


@pytest.fixture(scope="session")
def synthetic_trace(synthetic_cfg, synthetic_model):
    truth = simulate_ground_truth(synthetic_cfg, model=synthetic_model)
    return run_observer(synthetic_cfg, truth=truth, model=synthetic_model)


@pytest.fixture(scope="session")
def example_cfg():
    return parse_scenario(EXAMPLE_CONFIG)


@pytest.fixture(scope="session")
def example_model(example_cfg):
    return build_model(example_cfg)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260818)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # read the module instance the tests actually ran in; a fresh import
    # here would see an empty scoreboard
    mod = None
    for name, candidate in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance" and candidate is not None:
            mod = candidate
            break
    if mod is None:
        return
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
