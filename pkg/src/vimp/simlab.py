"""Monte Carlo harness: grid of (delta, p, n) cells, replicates, aggregation.

Every replicate of every cell is seeded from
``derive_seed(base_seed, delta, p, n, replicate)``, so a cell's output does not
depend on which other cells are in the grid or on execution order.
Aggregation first averages each metric over the p variables of a replicate
(they share one dataset and are exchangeable), then summarises the
per-replicate means: SE = SD / sqrt(reps).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from vimp import theory
from vimp.datagen import DataSpec, generate_pair
from vimp.errors import EmptyInputError, InvalidParameterError, SchemaMismatchError
from vimp.forest import ForestConfig, ForestPredictor, worker_count
from vimp.importance import LinearPredictor, report
from vimp.seeding import derive_seed

MODELS = ("linear", "forest")
METRICS = ("pap", "loco", "c_hat", "t")

RAW_COLUMNS = ("model", "delta", "p", "n", "replicate", "variable", "pap_emp", "loco_emp", "c_hat", "t_emp",
               "pap_clamped", "loco_clamped", "seed")
AGG_COLUMNS = ("model", "delta", "p", "n", "metric", "emp_mean", "emp_sd", "emp_2se", "theory_raw",
               "theory_corrected", "rel_diff", "abs_diff", "clamp_rate")


@dataclass(frozen=True)
class GridSpec:
    deltas: tuple[float, ...] = theory.GRID_DELTAS
    ps: tuple[int, ...] = theory.GRID_PS
    ns: tuple[int, ...] = theory.GRID_NS
    reps: int = 100
    beta_value: float = 1.0
    noise_var: float = 0.1
    model: str = "linear"
    apply_correction: bool = True
    base_seed: int = 0
    n_trees: int = 500
    min_node: int = 5
    pap_reps: int = 1

    def __post_init__(self) -> None:
        for name in ("deltas", "ps", "ns"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.deltas or not self.ps or not self.ns:
            raise InvalidParameterError("deltas, ps and ns must all be non-empty")
        if any(not (0.0 <= d < 1.0) for d in self.deltas):
            raise InvalidParameterError(f"every delta must lie in [0, 1), got {self.deltas}")
        if any(p < 2 for p in self.ps):
            raise InvalidParameterError(f"every p must be >= 2, got {self.ps}")
        if any(n < 1 for n in self.ns):
            raise InvalidParameterError(f"every n must be >= 1, got {self.ns}")
        if self.reps < 1:
            raise InvalidParameterError(f"reps must be >= 1, got {self.reps}")
        if self.model not in MODELS:
            raise InvalidParameterError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.model == "linear" and min(self.ns) <= max(self.ps):
            raise InvalidParameterError("linear cells need n > p for every (p, n) pair in the grid")
        if not (self.noise_var > 0.0):
            raise InvalidParameterError(f"noise_var must be > 0, got {self.noise_var}")

    def cells(self) -> list[tuple[float, int, int]]:
        return [(d, p, n) for d in self.deltas for p in self.ps for n in self.ns]

    def forest_config(self) -> ForestConfig:
        return ForestConfig(n_trees=self.n_trees, min_node=self.min_node)


@dataclass(frozen=True)
class Record:
    """One variable of one replicate. ``resid_var`` is not written to CSV."""

    model: str
    delta: float
    p: int
    n: int
    replicate: int
    variable: int
    pap_emp: float
    loco_emp: float
    c_hat: float | None
    t_emp: float | None
    pap_clamped: bool
    loco_clamped: bool
    seed: int
    resid_var: float | None = None


@dataclass(frozen=True)
class SimResult:
    model: str
    delta: float
    p: int
    n: int
    metric: str
    reps: int
    emp_mean: float
    emp_sd: float
    emp_2se: float
    theory_raw: float
    theory_corrected: float
    rel_diff: float | None
    abs_diff: float
    clamp_rate: float | None
    rel_diff_raw: float | None = None
    abs_diff_raw: float | None = None

    @property
    def se(self) -> float:
        return self.emp_2se / 2.0


@dataclass
class GridRun:
    results: list[SimResult]
    records: list[Record]
    failures: list[tuple[tuple[float, int, int], str]] = field(default_factory=list)


def cell_seed(base_seed: int, delta: float, p: int, n: int, replicate: int) -> int:
    return derive_seed(base_seed, float(delta), int(p), int(n), int(replicate))


def _predictor(model: str, n_trees: int, min_node: int):
    if model == "linear":
        return LinearPredictor()
    if model == "forest":
        return ForestPredictor(ForestConfig(n_trees=n_trees, min_node=min_node), workers=worker_count())
    raise InvalidParameterError(f"model must be one of {MODELS}, got {model!r}")


def run_cell(delta: float, p: int, n: int, reps: int = 100, model: str = "linear", base_seed: int = 0, *,
             beta_value: float = 1.0, noise_var: float = 0.1, n_trees: int = 500, min_node: int = 5,
             pap_reps: int = 1) -> list[Record]:
    """All replicates of one grid cell, one record per (replicate, variable)."""
    predictor = _predictor(model, n_trees, min_node)
    records = []
    for r in range(reps):
        seed = cell_seed(base_seed, delta, p, n, r)
        spec = DataSpec.uniform(n, p, delta, beta_value, noise_var, seed)
        train, valid = generate_pair(spec)
        resid_var = None
        reports = report(predictor, train, valid, seed, pap_reps=pap_reps)
        if model == "linear":
            # same deterministic fit the report used internally
            resid_var = predictor.train(train).resid_var
        for rep in reports:
            records.append(Record(model, float(delta), int(p), int(n), r, rep.variable, rep.pap, rep.loco,
                                  rep.c_hat, rep.t_stat, rep.clamped_pap, rep.clamped_loco, seed, resid_var))
    return records


def _theory_values(metric: str, pt: theory.TheoryPoint) -> tuple[float, float]:
    if metric == "pap":
        return theory.pap_theoretical(pt), theory.pap_corrected(pt)
    if metric == "loco":
        raw = theory.loco_simplified(pt)
        return raw, (theory.loco_corrected(pt) if pt.n > pt.p else math.nan)
    if metric == "c_hat":
        c = theory.c_theoretical(pt)
        return c, c
    if metric == "t":
        t = theory.t_theoretical(pt) if pt.n > pt.p else math.nan
        return t, t
    raise InvalidParameterError(f"unknown metric {metric!r}")


def _rel(emp: float, th: float) -> float | None:
    if th == 0.0 or not math.isfinite(th):
        return None
    return (emp - th) / th


def aggregate(records: Iterable[Record], apply_correction: bool = True, beta_value: float | None = None,
              noise_var: float = 0.1) -> list[SimResult]:
    """Summarise records per (model, delta, p, n) cell and metric.

    ``beta_value`` defaults to the value implied by the records' cell when
    omitted (1.0). Results are ordered by (model, delta, p, n, metric).
    """
    recs = sorted(records, key=lambda r: (r.model, r.delta, r.p, r.n, r.replicate, r.variable))
    if not recs:
        raise EmptyInputError("aggregate needs at least one record")
    beta = 1.0 if beta_value is None else beta_value
    groups: dict[tuple, list[Record]] = {}
    for r in recs:
        groups.setdefault((r.model, r.delta, r.p, r.n), []).append(r)

    out = []
    for (model, delta, p, n), rows in groups.items():
        pt = theory.TheoryPoint(delta, p, n, beta, noise_var)
        by_rep: dict[int, list[Record]] = {}
        for r in rows:
            by_rep.setdefault(r.replicate, []).append(r)
        for metric in METRICS:
            attr = {"pap": "pap_emp", "loco": "loco_emp", "c_hat": "c_hat", "t": "t_emp"}[metric]
            rep_means = []
            for rep_rows in by_rep.values():
                vals = [getattr(r, attr) for r in rep_rows if getattr(r, attr) is not None]
                vals = [v for v in vals if math.isfinite(v)]
                if vals:
                    rep_means.append(float(np.mean(vals)))
            if not rep_means:
                continue
            arr = np.asarray(rep_means)
            mean = float(arr.mean())
            sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            raw, corrected = _theory_values(metric, pt)
            ref = corrected if apply_correction else raw
            rel = None if (model == "forest" and metric == "loco") else _rel(mean, ref)
            rel_raw = None if (model == "forest" and metric == "loco") else _rel(mean, raw)
            clamp = None
            if metric in ("pap", "loco"):
                flags = [getattr(r, f"{metric}_clamped") for r in rows]
                clamp = float(np.mean(flags))
            out.append(SimResult(model, delta, p, n, metric, len(by_rep), mean, sd, 2.0 * sd / math.sqrt(arr.size),
                                 raw, corrected, rel, mean - ref, clamp, rel_raw, mean - raw))
    return out


def _run_cell_job(args: tuple) -> list[Record]:
    grid, cell = args
    delta, p, n = cell
    return run_cell(delta, p, n, grid.reps, grid.model, grid.base_seed, beta_value=grid.beta_value,
                    noise_var=grid.noise_var, n_trees=grid.n_trees, min_node=grid.min_node,
                    pap_reps=grid.pap_reps)


def run_grid(grid: GridSpec, workers: int | None = None,
             progress: Callable[[tuple[float, int, int], list[Record] | None, str | None], None] | None = None
             ) -> GridRun:
    """Execute every cell; a failing cell is reported without stopping the rest."""
    workers = worker_count() if workers is None else workers
    cells = grid.cells()
    records: list[Record] = []
    failures: list[tuple[tuple[float, int, int], str]] = []

    def handle(cell, fn):
        try:
            recs = fn()
        except Exception as exc:  # noqa: BLE001 - partial-failure report
            failures.append((cell, f"{type(exc).__name__}: {exc}"))
            if progress:
                progress(cell, None, str(exc))
            return
        records.extend(recs)
        if progress:
            progress(cell, recs, None)

    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(cell, pool.submit(_run_cell_job, (grid, cell))) for cell in cells]
            for cell, fut in futures:
                handle(cell, fut.result)
    else:
        for cell in cells:
            handle(cell, lambda cell=cell: _run_cell_job((grid, cell)))

    records.sort(key=lambda r: (r.model, r.delta, r.p, r.n, r.replicate, r.variable))
    results = aggregate(records, grid.apply_correction, grid.beta_value, grid.noise_var) if records else []
    return GridRun(results, records, failures)


# --- parity between t-statistics and LOCO -------------------------------------------------


@dataclass
class ParityResult:
    x: np.ndarray
    y: np.ndarray
    slope: float
    keys: list[tuple[float, int, int]]
    facet_slopes: dict[tuple[int, int], float]


def through_origin_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``y ~ b x`` with no intercept."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or x.shape != y.shape:
        raise EmptyInputError("need equally sized, non-empty x and y")
    denom = float(x @ x)
    if denom == 0.0:
        raise ZeroDivisionError("all x values are zero")
    return float(x @ y) / denom


def parity_points(records: Iterable[Record], inflate: bool = False) -> tuple[np.ndarray, np.ndarray, list]:
    """Rescaled t-statistic vs finite-sample-adjusted LOCO, one point per record.

    ``x = t * sqrt(resid_var / (n - 1))`` undoes the LOCO-to-t scaling;
    ``y = LOCO * sqrt((n - p) / n)`` removes the degrees-of-freedom inflation
    of empirical LOCO. ``inflate=True`` multiplies by ``sqrt(n / (n - p))``
    instead.
    """
    xs, ys, keys = [], [], []
    for r in records:
        if r.t_emp is None or r.resid_var is None:
            continue
        factor = math.sqrt(r.n / (r.n - r.p)) if inflate else math.sqrt((r.n - r.p) / r.n)
        xs.append(r.t_emp * math.sqrt(r.resid_var / (r.n - 1)))
        ys.append(r.loco_emp * factor)
        keys.append((r.delta, r.p, r.n))
    return np.asarray(xs), np.asarray(ys), keys


def parity_from_records(records: Sequence[Record], inflate: bool = False) -> ParityResult:
    x, y, keys = parity_points(records, inflate)
    facets: dict[tuple[int, int], list[int]] = {}
    for k, (_, p, n) in enumerate(keys):
        facets.setdefault((p, n), []).append(k)
    facet_slopes = {f: through_origin_slope(x[idx], y[idx]) for f, idx in sorted(facets.items())}
    return ParityResult(x, y, through_origin_slope(x, y), keys, facet_slopes)


def parity_experiment(grid: GridSpec, inflate: bool = False, workers: int | None = None) -> ParityResult:
    if grid.model != "linear":
        raise InvalidParameterError("the parity experiment needs the linear model")
    run = run_grid(grid, workers=workers)
    return parity_from_records(run.records, inflate)


# --- CSV ------------------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _write(rows: Iterable[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_csv(records: Iterable[Record]) -> str:
    return _write(([getattr(r, c) for c in RAW_COLUMNS] for r in records), RAW_COLUMNS)


def results_csv(results: Iterable[SimResult]) -> str:
    return _write(([getattr(r, c) for c in AGG_COLUMNS] for r in results), AGG_COLUMNS)


def _parse(value: str, kind):
    if value == "":
        return None
    if kind is bool:
        return value == "1"
    return kind(value)


def read_results_csv(text: str) -> list[SimResult]:
    """Inverse of :func:`results_csv`.

    The CSV does not carry the replicate count or the raw-theory differences;
    ``reps`` is read back as 0 and the ``*_raw`` diffs as None.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in AGG_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaMismatchError(f"aggregate CSV is missing column {missing[0]!r}")
    out = []
    for line, row in enumerate(reader, start=2):
        try:
            out.append(SimResult(
                model=row["model"], delta=float(row["delta"]), p=int(row["p"]), n=int(row["n"]),
                metric=row["metric"], reps=0,
                emp_mean=float(row["emp_mean"]), emp_sd=float(row["emp_sd"]), emp_2se=float(row["emp_2se"]),
                theory_raw=float(row["theory_raw"] or "nan"),
                theory_corrected=float(row["theory_corrected"] or "nan"),
                rel_diff=_parse(row["rel_diff"], float), abs_diff=float(row["abs_diff"] or "nan"),
                clamp_rate=_parse(row["clamp_rate"], float),
            ))
        except (TypeError, ValueError) as exc:
            raise SchemaMismatchError(f"line {line}: {exc}") from None
    return out


PARITY_COLUMNS = ("delta", "p", "n", "replicate", "variable", "t_scaled", "loco_adjusted")


def parity_csv(records: Iterable[Record], inflate: bool = False) -> str:
    """Per-record parity pairs; records without a t-statistic are skipped."""
    recs = [r for r in records if r.t_emp is not None and r.resid_var is not None]
    x, y, _ = parity_points(recs, inflate)
    rows = ([r.delta, r.p, r.n, r.replicate, r.variable, float(xi), float(yi)] for r, xi, yi in zip(recs, x, y))
    return _write(rows, PARITY_COLUMNS)


def read_parity_csv(text: str) -> tuple[np.ndarray, np.ndarray, list[tuple[float, int, int]]]:
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in PARITY_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaMismatchError(f"parity CSV is missing column {missing[0]!r}")
    xs, ys, keys = [], [], []
    for line, row in enumerate(reader, start=2):
        try:
            xs.append(float(row["t_scaled"]))
            ys.append(float(row["loco_adjusted"]))
            keys.append((float(row["delta"]), int(row["p"]), int(row["n"])))
        except (TypeError, ValueError) as exc:
            raise SchemaMismatchError(f"line {line}: {exc}") from None
    return np.asarray(xs), np.asarray(ys), keys
