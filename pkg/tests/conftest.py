import numpy as np
import pytest

from morphforge.providers import ToyProvider


@pytest.fixture(scope="session")
def toy():
    return ToyProvider()


@pytest.fixture(scope="session")
def face_pair(toy):
    """Two rendered toy faces with their landmarks."""
    wa = toy.sample_latents(1, seed=101)[0]
    wb = toy.sample_latents(1, seed=202)[0]
    img_a = toy.decode_latent(wa)
    img_b = toy.decode_latent(wb)
    return {
        "wa": wa, "wb": wb,
        "img_a": img_a, "img_b": img_b,
        "lm_a": toy.detect_landmarks(img_a),
        "lm_b": toy.detect_landmarks(img_b),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(0)
