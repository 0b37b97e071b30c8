import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from heatlab import fields as fl

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def g1():
    return fl.GaussianMixtureField.gauss(1)


@pytest.fixture
def two_bump():
    G = fl.GaussianMixtureField.gauss
    return G(1, 1.0, (1.0,), 0.75) + G(1, 0.5, (-1.0,), 0.25)


def gauss_1d(x, s):
    return np.exp(-x * x / (4 * s)) / math.sqrt(4 * math.pi * s)
