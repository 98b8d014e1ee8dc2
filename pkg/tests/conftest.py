import numpy as np
import pytest

from physkey.channel import calibrate_to_reference_rates

# reference-deployment rates: entropy and word errors per quantized bit
REFERENCE_ENTROPY_RATE = 0.1248
REFERENCE_WORD_ERROR_RATE = 0.0054


@pytest.fixture(scope="session")
def calibrated_config():
    return calibrate_to_reference_rates(REFERENCE_ENTROPY_RATE, REFERENCE_WORD_ERROR_RATE,
                                    levels=9, seed=2026)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
