import numpy as np
import pytest

from v2vkfactor.scenarios import GmmParams, ScenarioProfile


def complex_gaussian(rng, n, power=1.0):
    """Zero-mean circular complex Gaussian samples with mean power ``power``."""
    return np.sqrt(power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def rician_samples(rng, n, k_db, power=1.0, phase=0.0):
    """Direct Rician generator, independent of the synthesis module."""
    k = 10.0 ** (k_db / 10.0)
    r2 = power * k / (1.0 + k)
    return np.sqrt(r2) * np.exp(1j * phase) + complex_gaussian(rng, n, power - r2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def constant_k_profile():
    """Degenerate single-mode profile with K pinned at 10 dB."""
    return ScenarioProfile("constant", avg_speed=27.8, s_k=630, s_ls=730,
                           gmm=GmmParams(0.0, -40.0, 1.0, 10.0, 1e-9))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
