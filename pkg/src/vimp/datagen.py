"""Synthetic regression data from the latent-variable collinearity model.

Predictors are built as ``X = Z A`` where ``Z`` holds i.i.d. standard normal
latents and ``A = delta * J + (1 - delta) * I``. The response is
``y = X beta + eps`` with Gaussian noise of variance ``noise_var`` and no
intercept.

Normal variates come from numpy's PCG64 ``Generator.standard_normal``
(ziggurat method). Correctness is judged statistically, not bit-for-bit
against any other generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from vimp.errors import IndexOutOfRangeError, InvalidParameterError
from vimp.seeding import SEED_MASK, derive_seed


def _validate_collinearity(p: int, delta: float) -> None:
    if int(p) != p or p < 2:
        raise InvalidParameterError(f"p must be an integer >= 2, got {p!r}")
    if not (0.0 <= delta < 1.0):
        raise InvalidParameterError(f"delta must lie in [0, 1), got {delta!r}")


@dataclass(frozen=True)
class DataSpec:
    """One generative scenario.

    ``noise_var`` is the variance (not the standard deviation) of the
    additive error.
    """

    n: int
    p: int
    delta: float
    beta: tuple[float, ...]
    noise_var: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be a positive integer, got {self.n!r}")
        _validate_collinearity(self.p, self.delta)
        if len(self.beta) != self.p:
            raise InvalidParameterError(f"beta has {len(self.beta)} entries, expected p={self.p}")
        if not np.all(np.isfinite(self.beta)):
            raise InvalidParameterError("beta entries must be finite")
        if not (self.noise_var > 0.0) or not np.isfinite(self.noise_var):
            raise InvalidParameterError(f"noise_var must be > 0, got {self.noise_var!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed <= SEED_MASK):
            raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @classmethod
    def uniform(cls, n: int, p: int, delta: float, beta_value: float = 1.0, noise_var: float = 0.1,
                seed: int = 0) -> "DataSpec":
        """Scenario with the same coefficient on every predictor."""
        return cls(n=n, p=p, delta=delta, beta=(beta_value,) * p, noise_var=noise_var, seed=seed)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Predictor matrix ``x`` (n x p) and response ``y`` (n,).

    Arrays are made read-only on construction so a Dataset can be shared
    between workers without copying.
    """

    x: np.ndarray
    y: np.ndarray
    spec: DataSpec | None = field(default=None)

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise InvalidParameterError(f"x must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise InvalidParameterError(f"y has shape {y.shape}, expected ({x.shape[0]},)")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def drop_column(self, i: int) -> "Dataset":
        _check_index(i, self.p)
        return Dataset(np.delete(self.x, i, axis=1), self.y, self.spec)


def _check_index(i: int, p: int) -> None:
    if not (0 <= i < p):
        raise IndexOutOfRangeError(f"variable index {i} outside [0, {p})")


def make_transform(p: int, delta: float) -> np.ndarray:
    """Return ``delta * J + (1 - delta) * I`` of size p x p."""
    _validate_collinearity(p, delta)
    a = np.full((p, p), float(delta))
    np.fill_diagonal(a, 1.0)
    return a


def _draw(spec: DataSpec, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((spec.n, spec.p))
    x = z @ make_transform(spec.p, spec.delta)
    eps = rng.standard_normal(spec.n) * np.sqrt(spec.noise_var)
    y = x @ np.asarray(spec.beta) + eps
    return Dataset(x, y, spec)


def generate(spec: DataSpec) -> Dataset:
    """Draw one dataset, deterministic in ``spec.seed``."""
    return _draw(spec, spec.seed)


def generate_pair(spec: DataSpec) -> tuple[Dataset, Dataset]:
    """Independent training and validation sets from the same scenario."""
    train = _draw(spec, derive_seed(spec.seed, "train"))
    valid = _draw(spec, derive_seed(spec.seed, "valid"))
    return train, valid


def permute_column(data: Dataset, i: int, seed: int) -> Dataset:
    """Copy of ``data`` with column ``i`` shuffled uniformly at random."""
    _check_index(i, data.p)
    rng = np.random.default_rng(seed)
    x = data.x.copy()
    x[:, i] = rng.permutation(x[:, i])
    return Dataset(x, data.y, data.spec)


def theoretical_covariance(p: int, delta: float) -> np.ndarray:
    """``A A^T`` written as ``(2d + (p-2)d^2) J + (1-d)^2 I``."""
    _validate_collinearity(p, delta)
    off = 2 * delta + (p - 2) * delta**2
    return off * np.ones((p, p)) + (1 - delta) ** 2 * np.eye(p)


def from_arrays(x: Sequence[Sequence[float]] | np.ndarray, y: Sequence[float] | np.ndarray) -> Dataset:
    return Dataset(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
