"""Ordinary least squares, prediction and classical t-statistics.

The default model has no intercept, matching the zero-mean generative model.
Fitting goes through a Cholesky factorisation of ``X^T X``; when LAPACK's
condition estimate for ``X^T X`` exceeds ``CHOLESKY_COND_LIMIT`` the fit is
redone from a QR factorisation of ``X`` itself, which squares the usable
condition range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from vimp.datagen import Dataset
from vimp.errors import (
    DegenerateFitError,
    DimensionMismatchError,
    EmptyInputError,
    InvalidParameterError,
    RankDeficientError,
)

CHOLESKY_COND_LIMIT = 1e8
SINGULAR_COND_LIMIT = 1.0 / np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class LinearFit:
    """Result of an OLS fit.

    ``resid_var`` is SSE / (n - k) with k the number of fitted parameters
    (p, plus one when an intercept is fitted). ``xtx_inv_diag`` covers the p
    predictors only.
    """

    coef: np.ndarray
    resid_var: float
    xtx_inv_diag: np.ndarray
    n: int
    p: int
    intercept: float = 0.0
    fit_intercept: bool = False
    solver: str = "cholesky"

    @property
    def dof(self) -> int:
        return self.n - self.p - int(self.fit_intercept)


def _cholesky_solve(g: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Solve ``g b = rhs``; None when g is not PD or too ill-conditioned."""
    anorm = np.abs(g).sum(axis=0).max()
    c, info = lapack.dpotrf(g, lower=0, clean=1)
    if info != 0:
        return None
    rcond, info = lapack.dpocon(c, anorm, uplo="U")
    if info != 0 or rcond * CHOLESKY_COND_LIMIT < 1.0:
        return None
    b, info = lapack.dpotrs(c, rhs, lower=0)
    ginv, info2 = lapack.dpotri(c, lower=0)
    if info != 0 or info2 != 0:
        return None
    return b, np.diag(ginv).copy()


def _qr_solve(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(design, mode="reduced")
    rcond, info = lapack.dtrcon(r, norm="1", uplo="U", diag="N")
    # cond(X^T X) = cond(R)^2
    if info != 0 or rcond == 0.0 or (1.0 / rcond) ** 2 >= SINGULAR_COND_LIMIT:
        raise RankDeficientError(
            "design matrix is numerically rank deficient "
            f"(estimated cond(X^T X) ~ {np.inf if rcond == 0 else (1.0 / rcond) ** 2:.3g})"
        )
    b = np.linalg.solve(r, q.T @ y)
    rinv = np.linalg.solve(r, np.eye(r.shape[0]))
    return b, np.einsum("ij,ij->i", rinv, rinv)


def fit(data: Dataset, fit_intercept: bool = False) -> LinearFit:
    """Least-squares fit of ``y`` on the columns of ``data.x``."""
    x, y = data.x, data.y
    n, p = x.shape
    k = p + int(fit_intercept)
    if n <= k:
        raise RankDeficientError(f"need n > {k} observations to fit {k} parameters, got n={n}")
    design = np.column_stack([np.ones(n), x]) if fit_intercept else x

    solved = _cholesky_solve(design.T @ design, design.T @ y)
    solver = "cholesky"
    if solved is None:
        solved = _qr_solve(design, y)
        solver = "qr"
    b, inv_diag = solved

    resid = y - design @ b
    resid_var = float(resid @ resid) / (n - k)
    if fit_intercept:
        return LinearFit(b[1:].copy(), resid_var, inv_diag[1:].copy(), n, p, float(b[0]), True, solver)
    return LinearFit(b, resid_var, inv_diag, n, p, 0.0, False, solver)


def predict(model: LinearFit, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.p:
        raise DimensionMismatchError(f"expected an (m, {model.p}) matrix, got shape {x.shape}")
    return x @ model.coef + model.intercept


def mse(pred: np.ndarray, y: np.ndarray) -> float:
    """Mean squared difference between predictions and targets."""
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if pred.shape != y.shape or pred.ndim != 1:
        raise DimensionMismatchError(f"shape mismatch: {pred.shape} vs {y.shape}")
    if pred.size == 0:
        raise EmptyInputError("mse of empty vectors")
    d = pred - y
    return float(d @ d) / d.size


def t_statistics(model: LinearFit) -> np.ndarray:
    """``coef_i / sqrt(resid_var * (X^T X)^{-1}_ii)`` for every predictor."""
    if model.resid_var <= 0.0:
        raise DegenerateFitError("residual variance is zero; t-statistics are undefined")
    return model.coef / np.sqrt(model.resid_var * model.xtx_inv_diag)


def standard_errors(model: LinearFit) -> np.ndarray:
    if model.resid_var < 0.0:
        raise InvalidParameterError("negative residual variance")
    return np.sqrt(model.resid_var * model.xtx_inv_diag)
