import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from core_prob import (  # noqa: E402
    Joint3,
    ProbVector,
    erasure_channel,
    extend_markov,
    joint_from_prior_channel,
)

FIXTURES = ROOT / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def erasure_chain():
    """Y uniform bit, X = erasure(1/6) of Y, Z = erasure(1/5) of X"""
    joint_yx = joint_from_prior_channel(ProbVector.uniform(2), erasure_channel(1 / 6), axes=("Y", "X"))
    return extend_markov(joint_yx, erasure_channel(1 / 5, erasure_input=True))


def xor_joint():
    p = np.zeros((2, 2, 2))
    for x in range(2):
        for z in range(2):
            p[x ^ z, x, z] = 0.25
    return Joint3(p)


def copy_joint():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 0.5
    return Joint3(p)


def pair_joint():
    p = np.zeros((4, 2, 2))
    for x in range(2):
        for z in range(2):
            p[2 * x + z, x, z] = 0.25
    return Joint3(p)


@pytest.fixture
def example_erasure():
    return erasure_chain()


@pytest.fixture
def example_xor():
    return xor_joint()


@pytest.fixture
def example_copy():
    return copy_joint()


@pytest.fixture
def example_pair():
    return pair_joint()


@pytest.fixture(autouse=True)
def restore_root_logger():
    """The CLI installs its own stderr handler; undo that after each test"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
