"""
Shared fixtures
"""
import numpy as np
import pandas as pd
import pytest

from plvc.design.dataset import make_dataset
from plvc.services.dgp import gen_dgp1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dgp1_sample(rng):
    """DGP1 draw with n = 150"""
    return gen_dgp1(150, rng)


@pytest.fixture
def noiseless_dataset(rng):
    """
    y = 0.5 w + (1 + z^2) + x (2 - z), exactly representable by cubic splines
    """
    n = 120
    z = rng.uniform(0.0, 2.0, n)
    w = rng.uniform(0.0, 4.0, n)
    x = rng.uniform(0.0, 2.0, n)
    y = 0.5 * w + (1.0 + z ** 2) + x * (2.0 - z)
    return make_dataset(y, w, x, z, linear_labels=["w"], varying_labels=["x"])


def dataset_frame(ds) -> pd.DataFrame:
    """Tabular form of a Dataset using its labels"""
    frame = pd.DataFrame({ds.response_label: ds.y, ds.index_label: ds.z})
    for j, label in enumerate(ds.linear_labels):
        frame[label] = ds.w[:, j]
    for l, label in enumerate(ds.varying_labels[1:], start=1):
        frame[label] = ds.x[:, l]
    return frame


@pytest.fixture
def write_dataset(tmp_path):
    """Write a Dataset to CSV and return the path"""
    def _write(ds, name="data.csv"):
        path = tmp_path / name
        dataset_frame(ds).to_csv(path, index=False, float_format="%.17g")
        return path
    return _write
