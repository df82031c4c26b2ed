"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline.
Criterion 7's long-horizon put clause is a known failure of the degree-2
global-basis estimator; the README's "Known red" section has the numbers.
"""

import subprocess
import sys
import time

import numpy as np

from dynkin import (
    LatticeModel,
    RegressionBasis,
    TimeGrid,
    american_backward_induction,
    cancellable_option_spec,
    game_backward_induction,
    payoff,
    perpetual_american_put,
    simulate_paths,
    solve_kstar,
    switching_backward_induction,
    tree_game_value,
    tree_saddle_check,
    tree_switching_values,
)
from dynkin.cli import RunConfig, cmd_sweep
from conftest import reference_market

BASIS = RegressionBasis(degree=2, scale=100.0)


def _report(num: int, ok: bool, budget_s: float, elapsed: float, detail: str):
    line = (
        f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail} "
        f"[{elapsed:.2f}s / budget {budget_s:.0f}s]"
    )
    print(line)
    assert ok, line
    assert elapsed <= budget_s, f"criterion {num} exceeded its runtime budget: {line}"


def test_criterion_1_closed_form_anchors():
    start = time.perf_counter()
    market = reference_market("put", 100.0)
    delta_star = perpetual_american_put(market, 100.0)
    k_star = solve_kstar(market)
    ok = abs(delta_star - 30.3) <= 0.05 and abs(k_star - 69.9) <= 0.05
    _report(
        1, ok, 1.0, time.perf_counter() - start,
        f"delta*={delta_star:.4f} (anchor 30.3 +-0.05), k*={k_star:.4f} (anchor 69.9 +-0.05)",
    )


def test_criterion_2_tree_identity_suite():
    start = time.perf_counter()
    grid = TimeGrid(0.5, 256)
    worst_identity = 0.0
    worst_sandwich = -np.inf
    for kind in ("call", "put"):
        for s0 in (60.0, 140.0):
            market = reference_market(kind, s0)
            model = LatticeModel.build(market, grid)
            spec = cancellable_option_spec(market, grid)
            v_levels, _ = tree_game_value(model, spec)
            y0_levels, y1_levels = tree_switching_values(model, spec)
            for m in range(257):
                diff = y1_levels[m] - y0_levels[m]
                worst_identity = max(worst_identity, float(np.abs(diff - v_levels[m]).max()))
                g = payoff(kind, model.level_prices(m).astype(float), 100.0)
                worst_sandwich = max(
                    worst_sandwich, float((g - diff).max()), float((diff - (g + 5.0)).max())
                )
    ok = worst_identity <= 1e-12 and worst_sandwich <= 1e-12
    _report(
        2, ok, 10.0, time.perf_counter() - start,
        f"max |(y1-y0)-V| = {worst_identity:.2e} (<=1e-12), "
        f"worst sandwich excess = {worst_sandwich:.2e} (<=1e-12)",
    )


def test_criterion_3_saddle_audit():
    start = time.perf_counter()
    grid = TimeGrid(0.5, 8)
    worst = 0.0
    n_exhaustive = 0
    for kind in ("call", "put"):
        market = reference_market(kind, 100.0)
        model = LatticeModel.build(market, grid)
        spec = cancellable_option_spec(market, grid)
        report = tree_saddle_check(model, spec, n_random_deviations=200, seed=2024)
        worst = max(worst, report.worst_tau_margin, report.worst_sigma_margin, report.pair_gap)
        n_exhaustive = report.n_exhaustive
    ok = worst <= 1e-10
    _report(
        3, ok, 30.0, time.perf_counter() - start,
        f"worst deviation margin {worst:.2e} (<=1e-10) over {n_exhaustive} exhaustive "
        f"threshold rules + 400 random rules per side and kind",
    )


def test_criterion_4_lsmc_vs_tree_oracle():
    start = time.perf_counter()
    market = reference_market("put", 60.0)
    grid = TimeGrid(0.5, 256)
    spec = cancellable_option_spec(market, grid)
    _, tree_v0 = tree_game_value(LatticeModel.build(market, grid), spec)
    values = []
    for run in range(20):
        paths = simulate_paths(market, grid, 4000, seed=10_000 + run)
        values.append(game_backward_induction(paths, spec, BASIS)[1])
    values = np.array(values)
    stderr = values.std(ddof=1) / np.sqrt(20)
    gap = abs(values.mean() - tree_v0)
    allowed = max(3.0 * stderr, 0.02 * tree_v0)
    ok = gap <= allowed
    _report(
        4, ok, 60.0, time.perf_counter() - start,
        f"|lsmc {values.mean():.4f} - tree {tree_v0:.4f}| = {gap:.2e} "
        f"<= max(3*stderr, 2%) = {allowed:.2e}",
    )


def test_criterion_5_large_penalty_equals_american():
    start = time.perf_counter()
    market = reference_market("put", 60.0, delta=40.0)
    grid = TimeGrid(0.5, 64)
    spec = cancellable_option_spec(market, grid)
    paths = simulate_paths(market, grid, 4000, seed=314159)
    game_surface, _, _ = game_backward_induction(paths, spec, BASIS)
    amer_surface, _, _ = american_backward_induction(paths, spec, BASIS)
    gap = float(np.abs(game_surface.game_values - amer_surface.game_values).max())
    clamp_hits = int(game_surface.cancel_region.sum())
    ok = gap <= 1e-12 and clamp_hits == 0
    _report(
        5, ok, 30.0, time.perf_counter() - start,
        f"delta=40 per-path-step gap {gap:.2e} (<=1e-12), clamp binds on {clamp_hits} nodes",
    )


def test_criterion_6_clamp_identity():
    start = time.perf_counter()
    grid = TimeGrid(0.5, 64)
    worst = 0.0
    for s0 in (60.0, 100.0, 140.0):
        market = reference_market("put", s0)
        spec = cancellable_option_spec(market, grid)
        paths = simulate_paths(market, grid, 4000, seed=271828)
        game_surface, _, _ = game_backward_induction(paths, spec, BASIS)
        sw_surface, _, _ = switching_backward_induction(paths, spec, BASIS)
        worst = max(worst, float(np.abs(sw_surface.game_values - game_surface.game_values).max()))
    ok = worst <= 1e-10
    _report(
        6, ok, 30.0, time.perf_counter() - start,
        f"per-(path,step) |(y1-y0) - clamp recursion| = {worst:.2e} (<=1e-10), "
        f"S0 in (60, 100, 140)",
    )


def test_criterion_7_perpetual_convergence_sweep():
    start = time.perf_counter()
    details = []
    clauses = []
    sandwich_ok = True
    t32 = {}
    for kind in ("call", "put"):
        market = reference_market(kind, 140.0)
        config = RunConfig(
            market=market,
            grid=TimeGrid(0.5, 250),
            n_paths=4000,
            n_runs=10,
            basis_degree=2,
            seed=11,
            antithetic=True,
            sweep_q_max=6,
            threads=4,
        )
        rows = cmd_sweep(config)
        g0 = payoff(kind, 140.0, 100.0)
        for row in rows:
            if not (g0 - 1e-9 <= row.value <= g0 + 5.0 + 1e-9):
                sandwich_ok = False
        t32[kind] = rows[-1].value
    call_ok = abs(t32["call"] - 45.0) <= 0.10 * 45.0
    put_ok = abs(t32["put"] - 3.885) <= 0.15 * 3.885
    clauses = [call_ok, put_ok, sandwich_ok]
    details.append(f"call@T=32: {t32['call']:.4f} vs 45.0 +-10% ({'ok' if call_ok else 'OUT'})")
    details.append(f"put@T=32: {t32['put']:.4f} vs 3.885 +-15% ({'ok' if put_ok else 'OUT'})")
    details.append(f"barrier sandwich on all rows: {'ok' if sandwich_ok else 'VIOLATED'}")
    _report(7, all(clauses), 600.0, time.perf_counter() - start, "; ".join(details))


def test_criterion_8_continuity_in_the_horizon():
    start = time.perf_counter()
    worst_rel = 0.0
    for kind in ("call", "put"):
        for s0 in (60.0, 140.0):
            market = reference_market(kind, s0)
            for horizon, steps in ((0.5, 1000), (4.0, 2000), (32.0, 4000)):
                # steps are multiples of 1000 so 1.001 * steps stays integral
                # and the step size h is unchanged by the horizon bump
                bumped_steps = round(steps * 1.001)
                grid_a = TimeGrid(horizon, steps)
                grid_b = TimeGrid(horizon * 1.001, bumped_steps)
                v_a = tree_game_value(
                    LatticeModel.build(market, grid_a), cancellable_option_spec(market, grid_a)
                )[1]
                v_b = tree_game_value(
                    LatticeModel.build(market, grid_b), cancellable_option_spec(market, grid_b)
                )[1]
                worst_rel = max(worst_rel, abs(v_b - v_a) / v_a)
    ok = worst_rel <= 0.005
    _report(
        8, ok, 60.0, time.perf_counter() - start,
        f"worst |v(1.001T) - v(T)| / v(T) = {worst_rel:.2e} (<=0.5%) "
        f"over T in (0.5, 4, 32), both kinds, S0 in (60, 140)",
    )


def test_criterion_9_sweep_determinism_across_threads(tmp_path):
    start = time.perf_counter()
    outputs = []
    for threads in ("1", "8"):
        out = tmp_path / f"sweep_t{threads}.csv"
        proc = subprocess.run(
            [
                sys.executable, "-m", "dynkin", "sweep",
                "--kind", "put", "--s0", "140", "--steps", "25", "--paths", "400",
                "--runs", "6", "--q-max", "2", "--seed", "31",
                "--threads", threads, "--out", str(out),
            ],
            capture_output=True,
            timeout=300,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    _report(
        9, ok, 300.0, time.perf_counter() - start,
        f"CSV bytes identical across --threads 1 and 8: {ok} ({len(outputs[0])} bytes)",
    )
