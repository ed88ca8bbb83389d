"""Shared fixtures: a smooth synthetic painting and artifacts built from it.

Session scope keeps bank construction (the slowest fixture) to one run.
"""

import numpy as np
import pytest

from polyptych.bank import build_bank, decompose_multires
from polyptych.features import FeatureExtractor


def sinusoid_texture(size: int = 64) -> np.ndarray:
    """Smooth three-channel texture; low-frequency so nets can track it."""
    yy, xx = np.indices((size, size))
    return np.stack([
        0.5 + 0.35 * np.sin(xx / 9.0 + 1.2 * np.sin(yy / 13.0)),
        0.5 + 0.35 * np.cos(yy / 11.0 + 0.8 * np.sin(xx / 7.0)),
        0.5 + 0.3 * np.sin((xx + yy) / 15.0),
    ]).astype(np.float32)


@pytest.fixture(scope="session")
def painting() -> np.ndarray:
    return sinusoid_texture(64)


@pytest.fixture(scope="session")
def extractor() -> FeatureExtractor:
    return FeatureExtractor()


@pytest.fixture(scope="session")
def small_bank(painting, extractor):
    patches = decompose_multires(painting, [8, 16])
    return build_bank(patches, extractor, k_target=2, min_category_size=3)
