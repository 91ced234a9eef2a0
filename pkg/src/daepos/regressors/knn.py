"""k-nearest-neighbors regression over raw dBm feature vectors."""

from __future__ import annotations

import numpy as np

from ..errors import DatasetError
from .base import ErrorRegressor, ModelSpec


class KnnModel(ErrorRegressor):
    family = "knn"

    def __init__(self, spec: ModelSpec, train_x: np.ndarray, train_y: np.ndarray, metadata=None):
        super().__init__(spec, input_width=train_x.shape[1], metadata=metadata)
        self.train_x = np.asarray(train_x, dtype=float)
        self.train_y = np.asarray(train_y, dtype=float)

    def _raw(self, X: np.ndarray) -> np.ndarray:
        # (nq, nt) squared distances; ties resolved toward lower training
        # index by the stable sort so predictions are order-deterministic.
        d2 = np.sum((X[:, None, :] - self.train_x[None, :, :]) ** 2, axis=2)
        order = np.argsort(d2, axis=1, kind="stable")
        nearest = order[:, : self.spec.k]
        return self.train_y[nearest].mean(axis=1)


def fit_knn(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> KnnModel:
    if spec.k > len(X):
        raise DatasetError(f"k={spec.k} exceeds the {len(X)} training records")
    return KnnModel(spec, train_x=X.copy(), train_y=y.copy())
