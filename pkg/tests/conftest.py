import numpy as np
import pytest

from helpers import ACCEPTANCE_LINES
from spectral_percept import mel_spectrogram
from spectral_percept.signals import music_like


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def music_spec():
    return mel_spectrogram(music_like(seed=0))


@pytest.fixture(scope="session")
def crop64(music_spec):
    return music_spec.values[96:160, 96:160].astype(float)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def nlpd_fit(crop64):
    from spectral_percept import FitConfig, fit_spectrogram

    return fit_spectrogram(crop64, FitConfig(loss="nlpd", seed=0))
