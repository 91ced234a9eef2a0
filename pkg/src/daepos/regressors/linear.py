"""Ordinary least squares with intercept."""

from __future__ import annotations

import numpy as np

from .base import ErrorRegressor, ModelSpec


class LinearModel(ErrorRegressor):
    family = "linear"

    def __init__(self, spec: ModelSpec, coef: np.ndarray, intercept: float, metadata=None):
        super().__init__(spec, input_width=len(coef), metadata=metadata)
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)

    def _raw(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef + self.intercept


def fit_linear(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    """Solve the normal equations; fall back to the pseudo-inverse solution
    (flagged in the model metadata) when the design matrix is singular."""
    ones = np.ones((len(X), 1))
    design = np.hstack([ones, X])
    gram = design.T @ design
    rhs = design.T @ y
    try:
        np.linalg.cholesky(gram)  # raises when singular / not positive definite
        beta = np.linalg.solve(gram, rhs)
        used_pinv = False
    except np.linalg.LinAlgError:
        beta = np.linalg.pinv(design) @ y
        used_pinv = True
    return LinearModel(
        spec,
        coef=beta[1:],
        intercept=float(beta[0]),
        metadata={"used_pseudo_inverse": used_pinv},
    )
