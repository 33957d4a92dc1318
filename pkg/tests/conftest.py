import numpy as np
import pytest

from dealersim.ecnmodel import build_default_model
from dealersim.mixture import GaussianMixture


@pytest.fixture(scope="session")
def default_model():
    return build_default_model(777)


@pytest.fixture(scope="session")
def model_path(default_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    default_model.save(path)
    return path


def point_mass_mixture(values, var: float = 1e-12) -> GaussianMixture:
    """Single-component mixture concentrated at one vector."""
    values = np.asarray(values, dtype=float)
    d = values.shape[0]
    return GaussianMixture(
        weights=np.array([1.0]),
        means=values[None, :],
        covs=var * np.eye(d)[None, :, :],
    )
