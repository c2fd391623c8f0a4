import os

import numpy as np
import pytest

from cluster_contrast import _kernels
from cluster_contrast.dataset import DataTable, EmbeddedDataset

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jitted kernels up front so timed tests never pay for it."""
    _kernels.warmup()


@pytest.fixture(scope="session")
def fixture_dir():
    return os.path.abspath(FIXTURE_DIR)


def make_dataset(points, labels=None, coords=None, names=None) -> EmbeddedDataset:
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    names = names or ["f%d" % j for j in range(d)]
    table = DataTable(points, names, [str(i) for i in range(n)])
    return EmbeddedDataset(
        table,
        None if coords is None else np.asarray(coords, float),
        None if labels is None else np.asarray(labels, np.int64),
    )


def two_blob_dataset(n_per=40, d=5, gap=6.0, seed=0, scale=1.0):
    """Two Gaussian blobs offset in feature 0, matching 2D blob coordinates."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, scale, size=(n_per, d))
    b = rng.normal(0.0, scale, size=(n_per, d))
    b[:, 0] += gap
    points = np.vstack([a, b])
    coords = np.vstack(
        [rng.normal(0.0, 0.6, size=(n_per, 2)), rng.normal(8.0, 0.6, size=(n_per, 2))]
    )
    labels = np.array([0] * n_per + [1] * n_per)
    return make_dataset(points, labels, coords)
