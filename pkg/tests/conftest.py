import numpy as np
import pytest

from oatest.data import SplitConfig, StudentSplit, SynthSpec, synthesize_dataset
from oatest.mirt import MirtModel, pretrain


@pytest.fixture(scope="session")
def synth():
    """The 200 x 300 x 8 synthetic cohort used throughout."""
    return synthesize_dataset(SynthSpec(), seed=13)


@pytest.fixture(scope="session")
def dataset(synth):
    return synth[0]


@pytest.fixture(scope="session")
def truth(synth):
    return synth[1]


@pytest.fixture(scope="session")
def model(dataset):
    return pretrain(dataset, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_model(alpha, theta=None):
    alpha = np.asarray(alpha, dtype=float)
    d = alpha.shape[1]
    theta = np.zeros((1, d)) if theta is None else np.atleast_2d(theta)
    return MirtModel(theta, alpha, np.zeros(d))


def make_split(student, candidate, responses, test_q, test_r, train_q=(), train_r=()):
    return StudentSplit(student, train_q, train_r, candidate, responses, test_q, test_r)


@pytest.fixture
def small_config():
    return SplitConfig(max_length=5, min_interactions=30, pretrain_fraction=0.0)


# acceptance outcomes, printed once at the end of the session
ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{status:<4}  {name}: {detail}")
