"""Command-line front end.

    vimp verify                      closed-form identity checks
    vimp simulate --model linear     Monte Carlo grid -> raw/aggregate/parity CSV
    vimp figures --in out/run        SVG figures from simulate output
    vimp report --in data.csv        importance table for a dataset CSV
    vimp generate --n 200 --p 3      dump simulated train/valid CSVs

Every subcommand also takes ``--config FILE`` with ``key=value`` lines named
after the long flags (``noise-var=0.2``); flags given on the command line win.

Exit codes: 0 success, 1 identity violation or failed computation,
2 usage error, 3 I/O or malformed input file.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from vimp import figures, simlab, theory
from vimp.datagen import DataSpec, generate_pair
from vimp.errors import RankDeficientError, SchemaMismatchError, VimpError
from vimp.forest import ForestConfig, ForestPredictor
from vimp.importance import LinearPredictor, report
from vimp.tabular import CsvParseError, read_dataset, split_halves, write_dataset

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

FIGURE_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig5")


class UsageError(Exception):
    pass


def _list_of(kind, name: str):
    def parse(text: str):
        parts = [s.strip() for s in text.split(",") if s.strip()]
        if not parts:
            raise argparse.ArgumentTypeError(f"{name} must be a non-empty comma-separated list")
        try:
            return tuple(kind(s) for s in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {name} list: {text!r}") from None
    return parse


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file; command-line flags take precedence")

    parser = argparse.ArgumentParser(prog="vimp", description="PaP/LOCO variable importance under collinearity")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="check the closed-form identities")
    v.add_argument("--deltas", type=_list_of(float, "deltas"), default=theory.GRID_DELTAS)
    v.add_argument("--ps", type=_list_of(int, "ps"), default=theory.GRID_PS)
    v.add_argument("--ns", type=_list_of(int, "ns"), default=theory.GRID_NS)
    v.add_argument("--sweep", type=int, default=1000, help="random (delta, p) points (default 1000)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--perturb-c", type=float, default=0.0, help=argparse.SUPPRESS)

    s = sub.add_parser("simulate", parents=[common], help="run the Monte Carlo grid")
    s.add_argument("--model", choices=simlab.MODELS, default="linear")
    s.add_argument("--deltas", type=_list_of(float, "deltas"), default=theory.GRID_DELTAS)
    s.add_argument("--ps", type=_list_of(int, "ps"), default=theory.GRID_PS)
    s.add_argument("--ns", type=_list_of(int, "ns"), default=theory.GRID_NS)
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--noise-var", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, default=None, help="output directory (default ./out/<timestamp>)")
    s.add_argument("--no-correction", action="store_true", help="compare against uncorrected theory")
    s.add_argument("--n-trees", type=int, default=500)
    s.add_argument("--min-node", type=int, default=5)
    s.add_argument("--pap-reps", type=int, default=1, help="permutations averaged per PaP value")
    s.add_argument("--quiet", action="store_true", help="suppress per-cell progress lines")

    f = sub.add_parser("figures", parents=[common], help="emit SVG figures from simulate output")
    f.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True,
                   help="aggregate CSV files or simulate output directories")
    f.add_argument("--parity", type=Path, default=None, help="parity CSV (default: parity.csv beside the input)")
    f.add_argument("--out", type=Path, default=None)
    f.add_argument("--only", type=_list_of(str, "figure names"), default=FIGURE_NAMES,
                   help=f"subset of {','.join(FIGURE_NAMES)}")

    r = sub.add_parser("report", parents=[common], help="importance table for a dataset CSV (x1..xp,y)")
    r.add_argument("--in", dest="input", type=Path, required=True)
    r.add_argument("--valid", type=Path, default=None, help="validation CSV (default: second half of --in)")
    r.add_argument("--model", choices=simlab.MODELS, default="linear")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--pap-reps", type=int, default=1)
    r.add_argument("--n-trees", type=int, default=500)
    r.add_argument("--min-node", type=int, default=5)

    g = sub.add_parser("generate", parents=[common], help="write simulated train.csv and valid.csv")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--delta", type=float, default=0.5)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--noise-var", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    return parser


def _config_tokens(subparser: argparse.ArgumentParser, path: Path) -> list[str]:
    """Translate a key=value file into flag tokens for ``subparser``."""
    flags = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from None
    tokens: list[str] = []
    for num, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        action = flags.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        if action.nargs == 0:
            if _bool(value):
                tokens.append(f"--{key}")
        elif action.nargs in ("+", "*"):
            tokens += [f"--{key}", *value.split()]
        else:
            tokens += [f"--{key}", value]
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    tokens = _config_tokens(subparser, args.config)
    pos = list(argv).index(args.command)
    # config values first so later command-line flags override them
    return parser.parse_args([*argv[:pos], args.command, *tokens, *argv[pos + 1:]])


def _default_out() -> Path:
    return Path("out") / _dt.datetime.now().strftime("%Y%m%d-%H%M%S")


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def _g(v: float | None) -> str:
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6g}"


# --- subcommands ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    grid = theory.standard_grid(args.deltas, args.ps, args.ns)
    checks = [("grid", theory.consistency_check(grid, args.perturb_c))]
    if args.sweep > 0:
        # the brute-force inverse is only meaningful on well-conditioned points,
        # so the sweep checks identities (a) and (b)
        sweep = theory.random_sweep(args.sweep, seed=args.seed)
        checks.append(("sweep", theory.consistency_check(sweep, args.perturb_c, check_inverse=False)))
    print(f"{'set':<6} {'identity':<14} {'points':>6} {'worst rel':>11} {'tol':>8}  status  worst point")
    ok = True
    for label, rep in checks:
        for name, tol in rep.tolerances.items():
            if label == "sweep" and name == "xtx_inverse":
                continue
            value = getattr(rep, name)
            pt = rep.worst_points.get(name)
            where = "-" if pt is None else f"delta={pt.delta:.4g} p={pt.p} n={pt.n}"
            status = "ok" if value <= tol else "FAIL"
            ok &= value <= tol
            print(f"{label:<6} {name:<14} {rep.n_points:>6} {value:>11.3e} {tol:>8.0e}  {status:<6}  {where}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_simulate(args: argparse.Namespace) -> int:
    grid = simlab.GridSpec(
        deltas=args.deltas, ps=args.ps, ns=args.ns, reps=args.reps, beta_value=args.beta,
        noise_var=args.noise_var, model=args.model, apply_correction=not args.no_correction,
        base_seed=args.seed, n_trees=args.n_trees, min_node=args.min_node, pap_reps=args.pap_reps,
    )
    out = args.out or _default_out()
    cells = grid.cells()
    done = [0]

    def progress(cell, recs, err):
        done[0] += 1
        if args.quiet:
            return
        delta, p, n = cell
        head = f"[{done[0]}/{len(cells)}] {grid.model} delta={delta:g} p={p} n={n}"
        if err is not None:
            print(f"{head}: FAILED {err}", flush=True)
            return
        part = simlab.aggregate(recs, grid.apply_correction, grid.beta_value, grid.noise_var)
        vals = {r.metric: r.emp_mean for r in part}
        print(f"{head}: pap={_g(vals.get('pap'))} loco={_g(vals.get('loco'))} "
              f"c={_g(vals.get('c_hat'))}", flush=True)

    run = simlab.run_grid(grid, progress=progress)
    _write(out / "raw.csv", simlab.records_csv(run.records))
    _write(out / "aggregate.csv", simlab.results_csv(run.results))
    if grid.model == "linear":
        _write(out / "parity.csv", simlab.parity_csv(run.records))
    print(f"wrote {len(run.records)} records, {len(run.results)} aggregate rows to {out}")
    if run.failures:
        print(f"{len(run.failures)} of {len(cells)} cells failed:", file=sys.stderr)
        for (delta, p, n), msg in run.failures:
            print(f"  delta={delta:g} p={p} n={n}: {msg}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None


def cmd_figures(args: argparse.Namespace) -> int:
    unknown = [name for name in args.only if name not in FIGURE_NAMES]
    if unknown:
        raise UsageError(f"unknown figure {unknown[0]!r}; choose from {','.join(FIGURE_NAMES)}")
    results: list[simlab.SimResult] = []
    parity_path = args.parity
    for path in args.inputs:
        csv_path = path / "aggregate.csv" if path.is_dir() else path
        results += simlab.read_results_csv(_read_text(csv_path))
        sibling = csv_path.parent / "parity.csv"
        if parity_path is None and sibling.exists():
            parity_path = sibling
    out = args.out or _default_out() / "figures"
    linear = [r for r in results if r.model == "linear"]
    forest = [r for r in results if r.model == "forest"]
    jobs = []
    if "fig1" in args.only and linear:
        jobs.append(("fig1_linear_importance.svg",
                     lambda: figures.trend_figure(linear, ("pap", "loco"), "Linear model: importance vs delta",
                                                  "importance")))
    if "fig2" in args.only and forest:
        jobs.append(("fig2_forest_importance.svg",
                     lambda: figures.trend_figure(forest, ("pap", "loco"), "Random forest: importance vs delta",
                                                  "importance")))
    if "fig3" in args.only and any(r.metric == "c_hat" for r in linear):
        jobs.append(("fig3_absorption.svg",
                     lambda: figures.trend_figure(linear, ("c_hat",), "Absorption coefficient vs delta", "c")))
    if "fig4" in args.only and parity_path is not None:
        x, y, keys = simlab.read_parity_csv(_read_text(parity_path))
        if keys:
            jobs.append(("fig4_parity.svg", lambda: figures.parity_figure(x, y, keys)))
    if "fig5" in args.only and linear:
        jobs.append(("fig5_relative_difference.svg", lambda: figures.bias_figure(linear)))
    if not jobs:
        print("nothing to draw for the given inputs", file=sys.stderr)
        return EXIT_VIOLATION
    for name, make in jobs:
        _write(out / name, make())
        print(f"wrote {out / name}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    data = read_dataset(args.input)
    if args.valid is None:
        train, valid = split_halves(data)
    else:
        train, valid = data, read_dataset(args.valid)
    if args.model == "linear":
        # without an intercept a constant column is technically estimable, but
        # it is confounded with the mean of y and its permutation is a no-op
        for part in (train, valid):
            constant = np.flatnonzero(np.ptp(part.x, axis=0) == 0.0)
            if constant.size:
                raise RankDeficientError(f"column x{constant[0] + 1} is constant; the linear fit is not "
                                         "identifiable as an importance model")
        predictor = LinearPredictor()
    else:
        predictor = ForestPredictor(ForestConfig(n_trees=args.n_trees, min_node=args.min_node))
    rows = report(predictor, train, valid, args.seed, pap_reps=args.pap_reps)
    print(format_report(rows), end="")
    return EXIT_OK


def format_report(rows) -> str:
    lines = ["variable,pap,loco,t,c_hat,pap_clamped,loco_clamped"]
    for r in rows:
        lines.append(",".join([f"x{r.variable + 1}", simlab._fmt(r.pap), simlab._fmt(r.loco),
                               simlab._fmt(r.t_stat), simlab._fmt(r.c_hat),
                               simlab._fmt(r.clamped_pap), simlab._fmt(r.clamped_loco)]))
    return "\n".join(lines) + "\n"


def cmd_generate(args: argparse.Namespace) -> int:
    spec = DataSpec.uniform(args.n, args.p, args.delta, args.beta, args.noise_var, args.seed)
    train, valid = generate_pair(spec)
    for name, data in (("train.csv", train), ("valid.csv", valid)):
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            write_dataset(data, args.out / name)
        except OSError as exc:
            raise OSError(f"cannot write {args.out / name}: {exc.strerror}") from None
        print(f"wrote {args.out / name}")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "figures": cmd_figures,
    "report": cmd_report,
    "generate": cmd_generate,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"vimp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"vimp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vimp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SchemaMismatchError, CsvParseError) as exc:
        print(f"vimp: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, VimpError) as exc:
        # invalid parameters from flags are usage errors; numerical failures are not
        if isinstance(exc, VimpError) and not isinstance(exc, ValueError):
            print(f"vimp: error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_VIOLATION
        print(f"vimp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
