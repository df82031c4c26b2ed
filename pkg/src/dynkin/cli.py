"""Command-line front end: price, sweep, tree, perpetual, verify.

Replicated Monte Carlo runs derive one seed per (horizon, run) pair from the
master seed, so results are independent of scheduling: ``--threads`` changes
wall time, never numbers.  Exit codes: 0 success, 1 verification failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import closedform, lattice, lsmc, verify
from .market import KINDS, PUT, MarketParams, TimeGrid
from .regress import RegressionBasis
from .sim import derived_seed, simulate_paths

DEFAULT_SEED = 123456789
SEED_ENV_VAR = "DYNKIN_SEED"
SWEEP_BASE_HORIZON = 0.5

# Built-in defaults; --config file entries override these, flags override both.
_DEFAULTS = dict(
    kind=PUT,
    s0=100.0,
    strike=100.0,
    rate=0.06,
    vol=0.4,
    penalty=5.0,
    horizon=0.5,
    steps=1000,
    paths=10000,
    runs=100,
    degree=2,
    antithetic=True,
    q_max=8,
    threads=1,
)


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    grid: TimeGrid
    n_paths: int = 10000
    n_runs: int = 100
    basis_degree: int = 2
    seed: int = DEFAULT_SEED
    antithetic: bool = True
    sweep_q_max: int = 8
    threads: int = 1

    def __post_init__(self):
        if not self.market.rho > 0.0:
            raise ValueError("pricing commands require vol > 0")
        if self.n_runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.n_runs}")
        if self.n_paths < 2:
            raise ValueError(f"paths must be >= 2, got {self.n_paths}")
        if self.basis_degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.basis_degree}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.sweep_q_max < 0:
            raise ValueError(f"q-max must be >= 0, got {self.sweep_q_max}")


@dataclass(frozen=True)
class PriceReport:
    mean: float
    std: float
    stderr: float
    run_values: np.ndarray


@dataclass(frozen=True)
class SweepRow:
    horizon: float
    value: float
    std_error: float
    perpetual: float


def _lsmc_run(task) -> float:
    """One full LSMC valuation; top-level so worker processes can pickle it."""
    market, horizon, steps, n_paths, degree, antithetic, run_seed, american = task
    grid = TimeGrid(horizon, steps)
    paths = simulate_paths(market, grid, n_paths, run_seed, antithetic)
    spec = lsmc.cancellable_option_spec(market, grid)
    basis = RegressionBasis(degree, market.strike)
    if american:
        _, v0, _ = lsmc.american_backward_induction(paths, spec, basis)
    else:
        _, v0, _ = lsmc.game_backward_induction(paths, spec, basis)
    return v0


def _run_tasks(tasks, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [_lsmc_run(t) for t in tasks]
    with multiprocessing.Pool(min(threads, len(tasks))) as pool:
        return pool.map(_lsmc_run, tasks)


def cmd_price(config: RunConfig, american: bool = False) -> PriceReport:
    """Average the LSMC value over replicated runs with derived seeds."""
    tasks = [
        (
            config.market,
            config.grid.horizon,
            config.grid.steps,
            config.n_paths,
            config.basis_degree,
            config.antithetic,
            derived_seed(config.seed, 0, run),
            american,
        )
        for run in range(config.n_runs)
    ]
    values = np.array(_run_tasks(tasks, config.threads))
    std = float(values.std(ddof=1)) if config.n_runs > 1 else 0.0
    return PriceReport(
        mean=float(values.mean()),
        std=std,
        stderr=std / float(np.sqrt(config.n_runs)),
        run_values=values,
    )


def cmd_sweep(config: RunConfig) -> list:
    """Value the contract over horizons 0.5 * 2^q, q = 0..q_max.

    The step count is held at ``config.grid.steps`` for every horizon, and
    the perpetual closed form provides the asymptote column.
    """
    rows = []
    for q in range(config.sweep_q_max + 1):
        horizon = SWEEP_BASE_HORIZON * 2**q
        tasks = [
            (
                config.market,
                horizon,
                config.grid.steps,
                config.n_paths,
                config.basis_degree,
                config.antithetic,
                derived_seed(config.seed, q, run),
                False,
            )
            for run in range(config.n_runs)
        ]
        values = np.array(_run_tasks(tasks, config.threads))
        std_error = (
            float(values.std(ddof=1) / np.sqrt(config.n_runs)) if config.n_runs > 1 else 0.0
        )
        rows.append(
            SweepRow(
                horizon=horizon,
                value=float(values.mean()),
                std_error=std_error,
                perpetual=closedform.perpetual_value(config.market),
            )
        )
    return rows


def sweep_csv(rows) -> str:
    lines = ["T,value,std_error,perpetual"]
    for row in rows:
        lines.append(
            f"{row.horizon:.10g},{row.value:.10g},{row.std_error:.10g},{row.perpetual:.10g}"
        )
    return "\n".join(lines) + "\n"


def cmd_tree(config: RunConfig) -> float:
    model = lattice.LatticeModel.build(config.market, config.grid)
    spec = lsmc.cancellable_option_spec(config.market, config.grid)
    _, v0 = lattice.tree_game_value(model, spec)
    return v0


def cmd_verify(config: RunConfig):
    results = verify.run_all_checks(seed=config.seed)
    return results, 0 if all(r.passed for r in results) else 1


def _parse_config_file(path: str) -> dict:
    """Flat key=value file; '#' starts a comment, blank lines are skipped."""
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _DEFAULTS and key != "seed":
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            entries[key] = value
    return entries


_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(key: str, value):
    if isinstance(value, str):
        if key == "kind":
            return value.lower()
        if key == "antithetic":
            try:
                return _BOOL_STRINGS[value.lower()]
            except KeyError:
                raise ValueError(f"antithetic must be true/false, got {value!r}") from None
        if key in ("steps", "paths", "runs", "degree", "q_max", "threads", "seed"):
            return int(value)
        return float(value)
    return value


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_entries = _parse_config_file(args.config) if args.config else {}

    def pick(key, flag_value):
        if flag_value is not None:
            return flag_value
        if key in file_entries:
            return _coerce(key, file_entries[key])
        return _DEFAULTS[key]

    seed = args.seed
    if seed is None and "seed" in file_entries:
        seed = _coerce("seed", file_entries["seed"])
    if seed is None and os.environ.get(SEED_ENV_VAR):
        seed = int(os.environ[SEED_ENV_VAR])
    if seed is None:
        seed = DEFAULT_SEED

    market = MarketParams(
        r=pick("rate", args.rate),
        rho=pick("vol", args.vol),
        s0=pick("s0", args.s0),
        strike=pick("strike", args.strike),
        delta=pick("penalty", args.penalty),
        kind=pick("kind", args.kind),
    )
    grid = TimeGrid(pick("horizon", args.horizon), pick("steps", args.steps))
    return RunConfig(
        market=market,
        grid=grid,
        n_paths=pick("paths", args.paths),
        n_runs=pick("runs", args.runs),
        basis_degree=pick("degree", args.degree),
        seed=int(seed),
        antithetic=pick("antithetic", args.antithetic),
        sweep_q_max=pick("q_max", args.q_max),
        threads=pick("threads", args.threads),
    )


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kind", choices=KINDS, default=None)
    common.add_argument("--s0", type=float, default=None, help="initial asset price")
    common.add_argument("--strike", type=float, default=None)
    common.add_argument("--rate", type=float, default=None, help="risk-free rate (1/year)")
    common.add_argument("--vol", type=float, default=None, help="volatility (1/sqrt-year)")
    common.add_argument("--penalty", type=float, default=None, help="cancellation penalty")
    common.add_argument("--horizon", type=float, default=None, help="maturity in years")
    common.add_argument("--steps", type=int, default=None, help="time steps M")
    common.add_argument("--paths", type=int, default=None, help="Monte Carlo paths per run")
    common.add_argument("--runs", type=int, default=None, help="independent runs to average")
    common.add_argument("--degree", type=int, default=None, help="regression degree")
    common.add_argument(
        "--antithetic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="antithetic pairing of paths",
    )
    common.add_argument("--q-max", dest="q_max", type=int, default=None, help="sweep exponent cap")
    common.add_argument(
        "--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV_VAR})"
    )
    common.add_argument("--threads", type=int, default=None, help="worker processes for runs")
    common.add_argument("--config", default=None, help="key=value config file; flags override")
    common.add_argument("--out", default=None, help="CSV output path")

    parser = argparse.ArgumentParser(
        prog="dynkin",
        description="Cancellable-option pricing by Monte Carlo backward induction, "
        "with tree oracles and perpetual benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    price = sub.add_parser("price", parents=[common], help="LSMC value averaged over runs")
    price.add_argument(
        "--american",
        action="store_true",
        help="drop the cancellation clamp (plain early-exercise value)",
    )
    sub.add_parser("sweep", parents=[common], help="horizon sweep T = 0.5 * 2^q as CSV")
    sub.add_parser("tree", parents=[common], help="exact binomial-tree value")
    sub.add_parser("perpetual", parents=[common], help="infinite-horizon closed form")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    return parser


def _write_or_print(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _resolve(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "price":
            report = cmd_price(config, american=args.american)
            label = "american" if args.american else "game"
            print(
                f"{label} value: {report.mean:.10g}  (run std {report.std:.4g}, "
                f"stderr {report.stderr:.4g}, {config.n_runs} runs x {config.n_paths} paths)"
            )
            if args.out:
                lines = ["run,value"] + [
                    f"{i},{v:.10g}" for i, v in enumerate(report.run_values)
                ]
                _write_or_print("\n".join(lines) + "\n", args.out)
            return 0

        if args.command == "sweep":
            rows = cmd_sweep(config)
            _write_or_print(sweep_csv(rows), args.out)
            if len(rows) > 1:
                print("adjacent-horizon increments (continuity diagnostic):", file=sys.stderr)
                for a, b in zip(rows, rows[1:]):
                    jump = abs(b.value - a.value)
                    print(
                        f"  T {a.horizon:g} -> {b.horizon:g}: |dv| = {jump:.4g}"
                        f"  (|dv|/dT = {jump / (b.horizon - a.horizon):.4g})",
                        file=sys.stderr,
                    )
            return 0

        if args.command == "tree":
            print(f"tree value: {cmd_tree(config):.10g}  (M={config.grid.steps})")
            return 0

        if args.command == "perpetual":
            value = closedform.perpetual_value(config.market)
            print(f"perpetual value: {value:.10g}")
            if config.market.kind == PUT:
                pp = closedform.PerpetualParams.from_market(config.market)
                print(f"delta* = {pp.delta_star:.10g}")
                if pp.k_star is not None:
                    print(f"k* = {pp.k_star:.10g}")
            return 0

        if args.command == "verify":
            results, code = cmd_verify(config)
            for result in results:
                print(result.line())
            n_fail = sum(not r.passed for r in results)
            print(f"{len(results) - n_fail}/{len(results)} checks passed")
            return code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
