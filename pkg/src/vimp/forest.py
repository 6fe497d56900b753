"""Bagged regression trees with per-split feature subsampling.

Each tree is grown on a bootstrap resample of size n. At every node ``mtry``
candidate features are drawn without replacement and the split minimising
the summed child SSE over midpoint thresholds is taken. Nodes smaller than
``2 * min_node`` and nodes where no split reduces the SSE become leaves.

With ``bootstrap=False`` every tree sees the full sample once and differs
only through the feature draws.

Tree ``t`` draws its bootstrap and feature keys from a generator seeded by
``(seed, t)``, so a forest is identical whichever thread grows which tree.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from vimp._tree_kernels import LEAF, grow_tree, predict_packed
from vimp.datagen import Dataset
from vimp.errors import DimensionMismatchError, InsufficientDataError, InvalidParameterError
from vimp.seeding import derive_seed


def default_mtry(p: int) -> int:
    """``max(2, floor(p / 3))``."""
    if p < 2:
        raise InvalidParameterError(f"p must be >= 2, got {p}")
    return max(2, p // 3)


def worker_count(default: int = 1) -> int:
    """Worker cap from the VIMP_THREADS environment variable."""
    raw = os.environ.get("VIMP_THREADS")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameterError(f"VIMP_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    mtry: int | None = None
    min_node: int = 5
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise InvalidParameterError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mtry is not None and self.mtry < 1:
            raise InvalidParameterError(f"mtry must be >= 1, got {self.mtry}")
        if self.min_node < 1:
            raise InvalidParameterError(f"min_node must be >= 1, got {self.min_node}")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidParameterError(f"max_depth must be >= 0, got {self.max_depth}")

    def resolved_mtry(self, p: int) -> int:
        mtry = default_mtry(p) if self.mtry is None else self.mtry
        if mtry > p:
            raise InvalidParameterError(f"mtry={mtry} exceeds p={p}")
        return mtry


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    config: ForestConfig
    n_features: int
    _packed: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.trees:
            raise InvalidParameterError("a forest needs at least one tree")
        offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([t.n_nodes for t in self.trees])
        packed = tuple(
            np.ascontiguousarray(np.concatenate([getattr(t, name) for t in self.trees]))
            for name in ("feature", "threshold", "left", "right", "value")
        )
        object.__setattr__(self, "_packed", packed + (offsets,))


def _grow_one(x: np.ndarray, y: np.ndarray, config: ForestConfig, mtry: int, t: int) -> Tree:
    n, p = x.shape
    rng = np.random.default_rng(derive_seed(config.seed, "tree", t))
    sample = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
    keys = rng.random((n, p))
    max_depth = -1 if config.max_depth is None else config.max_depth
    return Tree(*grow_tree(x, y, sample, keys, mtry, config.min_node, max_depth))


def train(data: Dataset, config: ForestConfig, workers: int | None = None) -> ForestModel:
    """Grow ``config.n_trees`` trees on bootstrap resamples of ``data``."""
    mtry = config.resolved_mtry(data.p)
    if data.n < 2:
        raise InsufficientDataError(f"need at least 2 observations, got n={data.n}")
    x = np.ascontiguousarray(data.x)
    y = np.ascontiguousarray(data.y)
    workers = worker_count() if workers is None else workers
    if workers > 1 and config.n_trees > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(lambda t: _grow_one(x, y, config, mtry, t), range(config.n_trees)))
    else:
        trees = [_grow_one(x, y, config, mtry, t) for t in range(config.n_trees)]
    return ForestModel(tuple(trees), config, data.p)


def predict(model: ForestModel, x: np.ndarray) -> np.ndarray:
    """Per-row mean of the tree predictions."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise DimensionMismatchError(f"expected an (m, {model.n_features}) matrix, got shape {x.shape}")
    return predict_packed(x, *model._packed)


@dataclass(frozen=True)
class ForestPredictor:
    """Adapter exposing the forest through the importance Predictor contract.

    ``config.seed`` is ignored; each ``train`` call uses the seed it is given.
    """

    config: ForestConfig = ForestConfig()
    workers: int | None = None

    def train(self, data: Dataset, seed: int) -> ForestModel:
        cfg = dataclasses.replace(self.config, seed=seed)
        return train(data, cfg, workers=self.workers)

    def predict(self, model: ForestModel, x: np.ndarray) -> np.ndarray:
        return predict(model, x)
