"""Model-agnostic empirical PaP and LOCO, and the empirical absorption coefficient.

Both measures are the square root of a validation-loss increase:

* PaP permutes column ``i`` of the validation set and keeps the fitted model.
* LOCO permutes column ``i`` of the training set, retrains, and scores the
  retrained model on the untouched validation set.

A negative loss difference (possible by chance when the true importance is
near zero) is clamped to zero before the square root and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Protocol, Sequence, runtime_checkable

import numpy as np

from vimp import linmodel
from vimp.datagen import Dataset, _check_index, permute_column
from vimp.errors import DimensionMismatchError, InvalidParameterError, ZeroCoefficientError
from vimp.linmodel import LinearFit
from vimp.seeding import derive_seed

ZERO_COEF_TOL = 1e-10


@runtime_checkable
class Predictor(Protocol):
    """Anything that can be trained on a Dataset and predict on a matrix.

    ``train`` must be deterministic given ``seed`` and must not share mutable
    state between calls, so several trainings may run concurrently.
    """

    def train(self, data: Dataset, seed: int) -> Any: ...

    def predict(self, model: Any, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class LinearPredictor:
    fit_intercept: bool = False

    def train(self, data: Dataset, seed: int = 0) -> LinearFit:
        return linmodel.fit(data, fit_intercept=self.fit_intercept)

    def predict(self, model: LinearFit, x: np.ndarray) -> np.ndarray:
        return linmodel.predict(model, x)


@dataclass(frozen=True)
class Importance:
    """A single empirical importance value.

    ``loss_diff`` is the raw (possibly negative) loss increase; ``value`` is
    ``sqrt(max(0, loss_diff))``.
    """

    value: float
    clamped: bool
    loss_diff: float
    base_loss: float
    perturbed_loss: float


@dataclass(frozen=True)
class LocoResult(Importance):
    retrained: Any = None


@dataclass(frozen=True)
class ImportanceReport:
    variable: int
    pap: float
    loco: float
    clamped_pap: bool
    clamped_loco: bool
    c_hat: float | None = None
    absorption: tuple[float, ...] | None = None
    t_stat: float | None = None


def sqrt_clamped(diff: float) -> tuple[float, bool]:
    if diff < 0.0:
        return 0.0, True
    return math.sqrt(diff), False


def _importance(base: float, perturbed: float) -> Importance:
    diff = perturbed - base
    value, clamped = sqrt_clamped(diff)
    return Importance(value, clamped, diff, base, perturbed)


def pap_empirical(predictor: Predictor, model: Any, valid: Dataset, i: int, seed: int,
                  reps: int = 1, base_loss: float | None = None) -> Importance:
    """Permute-and-predict importance of variable ``i``.

    With ``reps > 1`` the permuted loss is averaged over independent
    permutations before the difference is taken. ``base_loss`` may be passed
    in to avoid re-predicting the unpermuted validation set.
    """
    _check_index(i, valid.p)
    if reps < 1:
        raise InvalidParameterError(f"reps must be >= 1, got {reps}")
    if base_loss is None:
        base_loss = linmodel.mse(predictor.predict(model, valid.x), valid.y)
    losses = []
    for r in range(reps):
        permuted = permute_column(valid, i, derive_seed(seed, "perm", i, r))
        losses.append(linmodel.mse(predictor.predict(model, permuted.x), valid.y))
    return _importance(base_loss, float(np.mean(losses)))


def loco_empirical(predictor: Predictor, train: Dataset, valid: Dataset, i: int, seed: int,
                   base_loss: float, drop: bool = False, train_seed: int | None = None) -> LocoResult:
    """Leave-one-covariate-out importance of variable ``i``.

    By default column ``i`` of the training set is permuted and the model is
    retrained on the full-width data. ``drop=True`` removes the column from
    both sets instead; it exists for comparison only.

    ``base_loss`` is the validation loss of the model trained on the
    unmodified training set. ``train_seed`` seeds the retraining (defaults to
    a value derived from ``seed``).
    """
    _check_index(i, train.p)
    if train.p != valid.p:
        raise DimensionMismatchError(f"train has {train.p} columns, valid has {valid.p}")
    if train_seed is None:
        train_seed = derive_seed(seed, "retrain", i)
    if drop:
        retrained = predictor.train(train.drop_column(i), train_seed)
        pred = predictor.predict(retrained, np.delete(valid.x, i, axis=1))
    else:
        permuted = permute_column(train, i, derive_seed(seed, "loco", i))
        retrained = predictor.train(permuted, train_seed)
        pred = predictor.predict(retrained, valid.x)
    imp = _importance(base_loss, linmodel.mse(pred, valid.y))
    return LocoResult(imp.value, imp.clamped, imp.loss_diff, imp.base_loss, imp.perturbed_loss, retrained)


def absorption(original: LinearFit, retrained: LinearFit, i: int) -> np.ndarray:
    """Per-coefficient absorption ``(beta'_j - beta_j) / beta_i`` for j != i.

    A retrained fit with ``p - 1`` coefficients (drop-column LOCO) is read as
    having a zero at position ``i``.
    """
    _check_index(i, original.p)
    new = np.asarray(retrained.coef, dtype=np.float64)
    if retrained.p == original.p - 1:
        new = np.insert(new, i, 0.0)
    elif retrained.p != original.p:
        raise DimensionMismatchError(f"fits have {original.p} and {retrained.p} coefficients")
    bi = original.coef[i]
    if abs(bi) < ZERO_COEF_TOL:
        raise ZeroCoefficientError(f"coefficient {i} is ~0 ({bi:.3g}); absorption is undefined")
    return np.delete(new - original.coef, i) / bi


def estimate_c(original: LinearFit, retrained: LinearFit, i: int) -> float:
    """Mean absorption over the p - 1 untouched coefficients."""
    return float(np.mean(absorption(original, retrained, i)))


def report(predictor: Predictor, train: Dataset, valid: Dataset, seed: int, pap_reps: int = 1,
           drop: bool = False, variables: Sequence[int] | None = None) -> list[ImportanceReport]:
    """PaP, LOCO and (for linear models) absorption and t for every variable."""
    if train.p != valid.p:
        raise DimensionMismatchError(f"train has {train.p} columns, valid has {valid.p}")
    # retraining reuses the original training seed, so for randomised
    # learners LOCO reflects the permuted column rather than fresh RNG draws
    model_seed = derive_seed(seed, "train-model")
    model = predictor.train(train, model_seed)
    base = linmodel.mse(predictor.predict(model, valid.x), valid.y)
    is_linear = isinstance(model, LinearFit)
    t_stats = None
    if is_linear and model.resid_var > 0.0:
        t_stats = linmodel.t_statistics(model)
    out = []
    for i in (range(train.p) if variables is None else variables):
        pap = pap_empirical(predictor, model, valid, i, seed, reps=pap_reps, base_loss=base)
        loco = loco_empirical(predictor, train, valid, i, seed, base, drop=drop,
                              train_seed=model_seed)
        c_hat = absorb = None
        if is_linear:
            try:
                absorb_arr = absorption(model, loco.retrained, i)
                absorb = tuple(float(v) for v in absorb_arr)
                c_hat = float(np.mean(absorb_arr))
            except ZeroCoefficientError:
                pass
        out.append(ImportanceReport(
            variable=i,
            pap=pap.value,
            loco=loco.value,
            clamped_pap=pap.clamped,
            clamped_loco=loco.clamped,
            c_hat=c_hat,
            absorption=absorb,
            t_stat=None if t_stats is None else float(t_stats[i]),
        ))
    return out
