import os
import sys

import pytest
from hypothesis import settings

from contagion_is import ModelSpec

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def table1(z=0.10, **kw):
    return ModelSpec(a=(0.01,), w=(1.0,), b=0.0, n=125, horizon=5.0, threshold=z, **kw)


def table2(z=0.10, **kw):
    return ModelSpec(a=(0.01,), w=(1.0,), b=5.0, n=125, horizon=5.0, threshold=z, **kw)


def table3(z=0.10, coupling="total", **kw):
    return ModelSpec(a=(0.01, 0.05), w=(0.8, 0.2), b=5.0, n=125, horizon=5.0, threshold=z,
                     coupling=coupling, **kw)


@pytest.fixture
def spec1():
    return table1(0.2)


@pytest.fixture
def spec2():
    return table2(0.2)


@pytest.fixture
def spec3():
    return table3(0.2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "LOG", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LOG:
        terminalreporter.write_line(line)
