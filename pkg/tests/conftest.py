import numpy as np
import pytest

from dynkin import MarketParams, TimeGrid

REFERENCE_PARAMS = dict(r=0.06, rho=0.4, strike=100.0, delta=5.0)


def reference_market(kind: str, s0: float, **overrides) -> MarketParams:
    base = dict(REFERENCE_PARAMS)
    base.update(overrides)
    return MarketParams(s0=s0, kind=kind, **base)


@pytest.fixture(scope="session")
def put_60():
    return reference_market("put", 60.0)


@pytest.fixture(scope="session")
def put_140():
    return reference_market("put", 140.0)


@pytest.fixture(scope="session")
def call_60():
    return reference_market("call", 60.0)


@pytest.fixture(scope="session")
def grid_64():
    return TimeGrid(0.5, 64)


def assert_all_close(a, b, atol, msg=""):
    gap = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    assert gap <= atol, f"{msg} max gap {gap:.3e} > {atol:.3e}"
