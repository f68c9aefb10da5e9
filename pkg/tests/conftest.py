import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from spdetest import Hypotheses, TestLevel, build_model


@pytest.fixture(scope="session")
def hyp():
    return Hypotheses(0.1, 0.2)


@pytest.fixture(scope="session")
def model3():
    """The reference experiment model: N=3, lam_k=k, beta=1, gamma=0, sigma=1."""
    return build_model(beta=1.0, gamma=0.0, sigma=1.0, d=1, N=3)


@pytest.fixture(scope="session")
def level():
    return TestLevel(alpha=0.05, rho=0.1)
