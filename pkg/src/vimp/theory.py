"""Closed-form PaP, LOCO and t-statistic values under the latent collinearity model.

Every function takes a :class:`TheoryPoint` describing one scenario and one
coefficient under analysis. With ``a = 2d + (p-2)d^2`` (the off-diagonal
covariance) and ``b = (1-d)^2``:

* predictor variance ``1 + (p-1)d^2``
* PaP ``beta * sqrt(2 Var(x))``
* absorption ``c = a / (b + (p-1)a)``
* LOCO ``beta * (1-d) * sqrt(1+c)``
* t ``beta * (1-d) * sqrt((n-1)(1+(p-1)d)^2 / (v [(1+(p-2)d)^2 + (p-1)d^2]))``

``consistency_check`` verifies the algebraic identities linking these forms
numerically, using an elimination-based matrix inverse as the independent
oracle for the ``(X^T X)^{-1}`` diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from vimp.datagen import make_transform
from vimp.errors import EmptyInputError, InvalidParameterError

GRID_DELTAS = tuple(round(0.11 * k, 2) for k in range(10))
GRID_PS = (3, 6, 9, 12)
GRID_NS = (20, 63, 200, 632, 2000)


@dataclass(frozen=True)
class TheoryPoint:
    delta: float
    p: int
    n: int = 2000
    beta_i: float = 1.0
    noise_var: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 <= self.delta < 1.0):
            raise InvalidParameterError(f"delta must lie in [0, 1), got {self.delta!r}")
        if int(self.p) != self.p or self.p < 2:
            raise InvalidParameterError(f"p must be an integer >= 2, got {self.p!r}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be a positive integer, got {self.n!r}")
        if not (self.noise_var > 0.0):
            raise InvalidParameterError(f"noise_var must be > 0, got {self.noise_var!r}")


def var_x(pt: TheoryPoint) -> float:
    """Diagonal of ``A A^T``."""
    return 1.0 + (pt.p - 1) * pt.delta**2


def cov_x_offdiag(pt: TheoryPoint) -> float:
    """Off-diagonal of ``A A^T``."""
    return 2.0 * pt.delta + (pt.p - 2) * pt.delta**2


def pap_theoretical(pt: TheoryPoint) -> float:
    return pt.beta_i * math.sqrt(2.0 * var_x(pt))


def mse_base_theoretical(pt: TheoryPoint) -> float:
    """Validation MSE of the true linear model: the noise variance."""
    return pt.noise_var


def mse_permuted_theoretical(pt: TheoryPoint) -> float:
    """Validation MSE after permuting one column under the true coefficients."""
    return pt.noise_var + 2.0 * pt.beta_i**2 * var_x(pt)


def _c_denominator(delta: float, p: int) -> float:
    d = delta
    return 1 - 4 * d + 2 * p * d + p * p * d * d - 3 * p * d * d + 3 * d * d


def c_theoretical(pt: TheoryPoint) -> float:
    """Share of a removed coefficient absorbed by each remaining predictor."""
    denom = _c_denominator(pt.delta, pt.p)
    if abs(denom) < 1e-12:
        raise ZeroDivisionError(f"absorption denominator ~ 0 at delta={pt.delta}, p={pt.p}")
    return cov_x_offdiag(pt) / denom


def loco_exact(pt: TheoryPoint, c: float) -> float:
    """LOCO for an arbitrary absorption coefficient ``c``."""
    d, p = pt.delta, pt.p
    s1 = (1 - d) ** 2 * (1 + (p - 1) * c * c)
    s2 = cov_x_offdiag(pt) * ((p - 1) * c - 1) ** 2
    return pt.beta_i * math.sqrt(s1 + s2)


def loco_simplified(pt: TheoryPoint) -> float:
    return pt.beta_i * (1 - pt.delta) * math.sqrt(1 + c_theoretical(pt))


def loco_simplified_ratio(pt: TheoryPoint) -> float:
    """Same value as :func:`loco_simplified`, written without ``c``."""
    d, p = pt.delta, pt.p
    num = (1 + (p - 1) * d) ** 2
    den = (1 + (p - 2) * d) ** 2 + (p - 1) * d * d
    return pt.beta_i * (1 - d) * math.sqrt(num / den)


def loco_approx(pt: TheoryPoint) -> float:
    """First-order approximation ``beta (1 - delta)``.

    Off by the factor ``sqrt(1+c)``, which lies in ``[1, sqrt(p/(p-1))]``.
    Not used for acceptance.
    """
    return pt.beta_i * (1 - pt.delta)


def xtx_inv_diag_theoretical(pt: TheoryPoint) -> float:
    """Diagonal entry of ``((n-1) A A^T)^{-1}``."""
    if pt.n <= 1:
        raise InvalidParameterError("need n > 1")
    d, p = pt.delta, pt.p
    num = (1 + (p - 2) * d) ** 2 + (p - 1) * d * d
    den = (pt.n - 1) * (1 - d) ** 2 * (1 + (p - 1) * d) ** 2
    return num / den


def t_theoretical(pt: TheoryPoint) -> float:
    if pt.n <= pt.p:
        raise InvalidParameterError(f"need n > p, got n={pt.n}, p={pt.p}")
    d, p = pt.delta, pt.p
    num = (pt.n - 1) * (1 + (p - 1) * d) ** 2
    den = pt.noise_var * ((1 + (p - 2) * d) ** 2 + (p - 1) * d * d)
    return pt.beta_i * (1 - d) * math.sqrt(num / den)


def pap_corrected(pt: TheoryPoint) -> float:
    """PaP with the (n-1)/n finite-sample factor."""
    return pap_theoretical(pt) * (pt.n - 1) / pt.n


def loco_corrected(pt: TheoryPoint) -> float:
    """LOCO with the sqrt(n/(n-p)) degrees-of-freedom factor."""
    if pt.n <= pt.p:
        raise InvalidParameterError(f"degrees-of-freedom factor needs n > p, got n={pt.n}, p={pt.p}")
    return loco_simplified(pt) * math.sqrt(pt.n / (pt.n - pt.p))


def gauss_jordan_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    Deliberately written out by hand: it is the reference the closed-form
    inverse diagonal is checked against.
    """
    a = np.array(m, dtype=np.float64)
    k = a.shape[0]
    if a.shape != (k, k):
        raise InvalidParameterError(f"need a square matrix, got {a.shape}")
    aug = np.hstack([a, np.eye(k)])
    for col in range(k):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if aug[pivot, col] == 0.0:
            raise ZeroDivisionError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(k):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, k:]


def xtx_inv_diag_bruteforce(pt: TheoryPoint) -> np.ndarray:
    a = make_transform(pt.p, pt.delta)
    return np.diag(gauss_jordan_inverse((pt.n - 1) * (a @ a.T)))


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


@dataclass
class ConsistencyReport:
    """Worst relative discrepancy seen for each identity over a grid.

    * ``loco_identity``: ``loco_exact(pt, c(pt))`` vs ``loco_simplified(pt)``
    * ``t_bridge``: ``t_theoretical`` vs ``loco_simplified * sqrt((n-1)/v)``
    * ``xtx_inverse``: closed-form inverse diagonal vs elimination
    """

    n_points: int
    loco_identity: float = 0.0
    t_bridge: float = 0.0
    xtx_inverse: float = 0.0
    worst_points: dict[str, TheoryPoint | None] = field(default_factory=dict)

    tolerances = {"loco_identity": 1e-12, "t_bridge": 1e-12, "xtx_inverse": 1e-10}

    def violations(self) -> list[str]:
        return [k for k, tol in self.tolerances.items() if getattr(self, k) > tol]

    @property
    def passed(self) -> bool:
        return not self.violations()


def consistency_check(grid: Iterable[TheoryPoint], c_perturbation: float = 0.0,
                      check_inverse: bool = True) -> ConsistencyReport:
    """Evaluate the three identities at every point and keep the worst case.

    ``c_perturbation`` is added to the absorption coefficient fed into
    ``loco_exact``; it exists so callers can confirm the check is sensitive.
    Identity (b) needs ``n > p`` and identity (c) needs ``n > 1``; points
    outside those ranges skip the corresponding check.
    """
    points = list(grid)
    if not points:
        raise EmptyInputError("consistency_check needs at least one point")
    report = ConsistencyReport(n_points=len(points))
    worst: dict[str, TheoryPoint | None] = {k: None for k in ConsistencyReport.tolerances}
    for pt in points:
        simp = loco_simplified(pt)
        e_a = _rel(loco_exact(pt, c_theoretical(pt) + c_perturbation), simp)
        if e_a >= report.loco_identity:
            report.loco_identity, worst["loco_identity"] = e_a, pt
        if pt.n > pt.p:
            e_b = _rel(t_theoretical(pt), simp * math.sqrt((pt.n - 1) / pt.noise_var))
            if e_b >= report.t_bridge:
                report.t_bridge, worst["t_bridge"] = e_b, pt
        if check_inverse and pt.n > 1:
            brute = xtx_inv_diag_bruteforce(pt)
            closed = xtx_inv_diag_theoretical(pt)
            e_c = float(np.max(np.abs(brute - closed) / np.abs(brute)))
            if e_c >= report.xtx_inverse:
                report.xtx_inverse, worst["xtx_inverse"] = e_c, pt
    report.worst_points = worst
    return report


def standard_grid(deltas: Sequence[float] = GRID_DELTAS, ps: Sequence[int] = GRID_PS,
                  ns: Sequence[int] = GRID_NS, beta_i: float = 1.0, noise_var: float = 0.1) -> list[TheoryPoint]:
    return [TheoryPoint(d, p, n, beta_i, noise_var) for d in deltas for p in ps for n in ns]


def random_sweep(count: int = 1000, seed: int = 0, max_delta: float = 0.999, max_p: int = 20,
                 n: int = 2000) -> list[TheoryPoint]:
    """Uniform delta in [0, max_delta] and integer p in [2, max_p]."""
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(0.0, max_delta, count)
    ps = rng.integers(2, max_p + 1, count)
    return [TheoryPoint(float(d), int(p), n) for d, p in zip(deltas, ps)]
