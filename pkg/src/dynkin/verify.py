"""Bundled invariant checks behind the ``verify`` subcommand.

Each check compares an identity or bound that must hold between independent
computation routes (clamped recursion vs switching difference, Monte Carlo
vs tree, closed forms vs their anchors) and reports the observed margin
against its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import closedform, lattice, lsmc
from .market import CALL, PUT, MarketParams, TimeGrid
from .regress import RegressionBasis
from .sim import simulate_paths

REFERENCE_MARKET = dict(r=0.06, rho=0.4, strike=100.0, delta=5.0)
ANCHOR_DELTA_STAR = 30.3
ANCHOR_K_STAR = 69.9
ANCHOR_TOL = 0.05


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" [{self.detail}]" if self.detail else ""
        return f"{status}  {self.name}: margin={self.margin:.3e} tol={self.tolerance:.3e}{extra}"


def _market(kind: str, s0: float, **overrides) -> MarketParams:
    base = dict(REFERENCE_MARKET)
    base.update(overrides)
    return MarketParams(s0=s0, kind=kind, **base)


def check_closed_form_anchors() -> list:
    put = _market(PUT, 100.0)
    delta_star = closedform.perpetual_american_put(put, put.strike)
    k_star = closedform.solve_kstar(put)
    return [
        CheckResult(
            "closed-form delta* near 30.3",
            abs(delta_star - ANCHOR_DELTA_STAR) <= ANCHOR_TOL,
            abs(delta_star - ANCHOR_DELTA_STAR),
            ANCHOR_TOL,
            f"delta*={delta_star:.6f}",
        ),
        CheckResult(
            "closed-form k* near 69.9",
            abs(k_star - ANCHOR_K_STAR) <= ANCHOR_TOL,
            abs(k_star - ANCHOR_K_STAR),
            ANCHOR_TOL,
            f"k*={k_star:.6f}",
        ),
    ]


def check_tree_identities(tree_steps: int = 256, horizon: float = 0.5) -> list:
    """Switching-difference identity and two-barrier sandwich on the tree."""
    identity_tol = 1e-12
    sandwich_tol = 1e-12
    worst_identity = 0.0
    worst_sandwich = 0.0
    no_double_switch = True
    grid = TimeGrid(horizon, tree_steps)
    for kind in (CALL, PUT):
        for s0 in (60.0, 140.0):
            market = _market(kind, s0)
            model = lattice.LatticeModel.build(market, grid)
            spec = lsmc.cancellable_option_spec(market, grid)
            v_levels, _ = lattice.tree_game_value(model, spec)
            y0_levels, y1_levels = lattice.tree_switching_values(model, spec)
            switch0, switch1 = lattice.switching_policy_masks(model, spec)
            for m in range(tree_steps + 1):
                diff = y1_levels[m] - y0_levels[m]
                worst_identity = max(worst_identity, float(np.abs(diff - v_levels[m]).max()))
                prices = model.level_prices(m).astype(float)
                low = np.asarray(spec.lower(m, prices), dtype=float)
                up = np.asarray(spec.upper(m, prices), dtype=float)
                worst_sandwich = max(
                    worst_sandwich,
                    float((low - diff).max()),
                    float((diff - up).max()),
                )
                if m < tree_steps and np.any(switch0[m] & switch1[m]):
                    no_double_switch = False
    return [
        CheckResult(
            f"tree identity y1-y0 = game value (M={tree_steps})",
            worst_identity <= identity_tol,
            worst_identity,
            identity_tol,
        ),
        CheckResult(
            f"tree sandwich lower <= y1-y0 <= upper (M={tree_steps})",
            worst_sandwich <= sandwich_tol,
            worst_sandwich,
            sandwich_tol,
        ),
        CheckResult(
            "no node strictly prefers switching in both modes",
            no_double_switch,
            0.0 if no_double_switch else 1.0,
            0.0,
        ),
    ]


def check_saddle_audit(seed: int = 0, n_random: int = 200) -> list:
    results = []
    grid = TimeGrid(0.5, 8)
    for kind in (CALL, PUT):
        market = _market(kind, 100.0)
        model = lattice.LatticeModel.build(market, grid)
        spec = lsmc.cancellable_option_spec(market, grid)
        report = lattice.tree_saddle_check(model, spec, n_random, seed=seed)
        margin = max(report.worst_tau_margin, report.worst_sigma_margin, report.pair_gap)
        results.append(
            CheckResult(
                f"saddle deviation audit (M=8, {kind})",
                report.passed,
                margin,
                report.tolerance,
                f"{report.n_exhaustive} exhaustive + {report.n_random} random per side",
            )
        )
    return results


def check_lsmc_identities(seed: int, n_paths: int = 4000, steps: int = 64) -> list:
    """Path-level identities between the game and switching inductions."""
    market = _market(PUT, 100.0)
    grid = TimeGrid(0.5, steps)
    basis = RegressionBasis(2, market.strike)
    paths = simulate_paths(market, grid, n_paths, seed)
    spec = lsmc.cancellable_option_spec(market, grid)

    surface, v0, stderr = lsmc.game_backward_induction(paths, spec, basis)
    sw_surface, y0_0, y1_0 = lsmc.switching_backward_induction(paths, spec, basis)
    _, v0_amer, _ = lsmc.american_backward_induction(paths, spec, basis)

    clamp_margin = float(np.abs(sw_surface.game_values - surface.game_values).max())
    root_margin = abs((y1_0 - y0_0) - v0)

    sandwich = 0.0
    prices = paths.prices
    for m in range(steps + 1):
        low = spec.lower(m, prices[:, m])
        up = spec.upper(m, prices[:, m])
        v = surface.game_values[:, m]
        sandwich = max(sandwich, float((low - v).max()), float((v - up).max()))

    pair = lsmc.extract_stopping_pair(surface)
    realised = lsmc.evaluate_pair(paths, spec, pair)
    realised_gap = abs(realised - v0)

    deltas = {}
    for delta in (1.0, 5.0, 40.0):
        mkt = _market(PUT, 100.0, delta=delta)
        dspec = lsmc.cancellable_option_spec(mkt, grid)
        _, dv0, _ = lsmc.game_backward_induction(paths, dspec, basis)
        deltas[delta] = dv0
    monotone = deltas[1.0] <= deltas[5.0] + 1e-9 and deltas[5.0] <= deltas[40.0] + 1e-9

    return [
        CheckResult(
            f"clamp identity per path-step (M={steps}, N={n_paths})",
            clamp_margin <= 1e-10,
            clamp_margin,
            1e-10,
        ),
        CheckResult("switching root y1-y0 equals game v0", root_margin <= 1e-10, root_margin, 1e-10),
        CheckResult("path sandwich lower <= value <= upper", sandwich <= 1e-12, sandwich, 1e-12),
        CheckResult(
            "realised stopping pair within 3 stderr of v0",
            realised_gap <= 3.0 * stderr,
            realised_gap,
            3.0 * stderr,
            f"v0={v0:.4f} realised={realised:.4f}",
        ),
        CheckResult(
            "game value below early-exercise-only value",
            v0 <= v0_amer + 1e-10,
            max(0.0, v0 - v0_amer),
            1e-10,
        ),
        CheckResult(
            "value weakly increasing in the penalty (1, 5, 40)",
            monotone,
            0.0 if monotone else 1.0,
            0.0,
            " <= ".join(f"{deltas[d]:.4f}" for d in (1.0, 5.0, 40.0)),
        ),
    ]


def check_gap_rejection() -> list:
    try:
        MarketParams(s0=100.0, kind=PUT, r=0.06, rho=0.4, strike=100.0, delta=0.0)
        passed = False
    except ValueError:
        passed = True
    return [
        CheckResult(
            "zero penalty rejected (no strict barrier gap)",
            passed,
            0.0 if passed else 1.0,
            0.0,
        )
    ]


def run_all_checks(seed: int = 0) -> list:
    results = []
    results += check_closed_form_anchors()
    results += check_tree_identities()
    results += check_saddle_audit(seed=seed)
    results += check_lsmc_identities(seed=seed)
    results += check_gap_rejection()
    return results
