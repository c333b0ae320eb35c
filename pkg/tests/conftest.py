import hypothesis
import numpy as np
import pytest

from flamelet_ensemble.dataset import EncoderWeights, SyntheticConfig, encode, generate_synthetic

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")

SMALL = SyntheticConfig(n_flamelets=8, grid_size=41, extinction_threshold=0.0)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(SMALL, seed=3)


@pytest.fixture(scope="session")
def small_encoded(small_dataset):
    return encode(small_dataset, EncoderWeights.identity(small_dataset.species.names))


@pytest.fixture(scope="session")
def default_dataset():
    return generate_synthetic(seed=7)


@pytest.fixture(scope="session")
def default_encoded(default_dataset):
    return encode(default_dataset, EncoderWeights.identity(default_dataset.species.names))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
