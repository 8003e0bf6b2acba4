"""Shared data generators for the test suite."""

import numpy as np

from odmkit.data import Dataset, SparseVector


def dataset_from_dense(X, y):
    """Dense array rows -> Dataset (zeros dropped, indices 1-based)."""
    instances = []
    for row in np.atleast_2d(X):
        nz = np.flatnonzero(row != 0.0)
        instances.append(SparseVector(nz + 1, row[nz]))
    return Dataset(instances, np.asarray(y, dtype=np.int64), dim=np.atleast_2d(X).shape[1])


def random_dataset(rng, m, dim, density=1.0, unit_box=True, balanced=True):
    """Random dataset with both classes present (when balanced).

    unit_box keeps features in [0, 1]; otherwise they are standard normal.
    Labels correlate loosely with a random hyperplane so the problems are
    learnable but not separable.
    """
    if unit_box:
        X = rng.random((m, dim))
    else:
        X = rng.standard_normal((m, dim))
    if density < 1.0:
        X = X * (rng.random((m, dim)) < density)
    w = rng.standard_normal(dim)
    score = X @ w - np.median(X @ w)
    y = np.where(score + 0.3 * rng.standard_normal(m) >= 0, 1, -1)
    if balanced:
        if np.all(y == y[0]):
            y[: m // 2] = -y[0]
    return dataset_from_dense(X, y)


def random_psd(rng, n, shift=0.0):
    B = rng.standard_normal((n, n))
    H = B.T @ B
    return H + shift * np.eye(n)


def dense_of(dataset):
    return dataset.to_csr().toarray(), dataset.labels.astype(np.float64)
