"""Monte Carlo backward inductions for the two-barrier stopping game.

The game value is computed by a clamped recursion (regress the discounted
next-step value, then clamp between the exercise and cancellation barriers)
and, independently, as the difference of the two optimal-switching value
sequences.  When both inductions share paths and regression basis the two
routes agree path by path up to floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .market import MarketParams, TimeGrid
from .regress import DesignSolver, RegressionBasis
from .sim import PathSet, payoff

# Absolute tolerance for flagging a value as sitting on a barrier.  Far
# below the currency scale (~1e2) but far above accumulated roundoff.
REGION_TOL = 1e-9

BarrierFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GameSpec:
    """Two-barrier stopping game on a uniform step grid.

    ``lower(m, s)`` is what the maximiser collects by stopping at step m,
    ``upper(m, s)`` what the minimiser pays by stopping first, and
    ``terminal(s)`` the settlement if neither acts before the last step.
    Amounts are undiscounted; ``step_discount`` (= exp(-r h)) is applied
    once per step inside the recursions.

    The barriers must keep a strictly positive gap upper - lower at every
    visited state before the last step, and the terminal payoff must lie
    between them at the last step.  Both conditions are validated by the
    induction engines.
    """

    lower: BarrierFn
    upper: BarrierFn
    terminal: Callable[[np.ndarray], np.ndarray]
    step_discount: float

    def __post_init__(self):
        if not 0.0 < self.step_discount <= 1.0:
            raise ValueError(f"step_discount must be in (0, 1], got {self.step_discount}")


def cancellable_option_spec(params: MarketParams, grid: TimeGrid) -> GameSpec:
    """Game spec for the cancellable option.

    Exercising pays the vanilla payoff G; cancelling costs the writer
    G + delta; at expiry the holder receives G.
    """
    if not params.rho > 0.0:
        raise ValueError("pricing requires rho > 0 (rho = 0 is for simulator tests only)")
    kind, strike, delta = params.kind, params.strike, params.delta

    def lower(m, s):
        return payoff(kind, s, strike)

    def upper(m, s):
        return payoff(kind, s, strike) + delta

    def terminal(s):
        return payoff(kind, s, strike)

    return GameSpec(
        lower=lower,
        upper=upper,
        terminal=terminal,
        step_discount=float(np.exp(-params.r * grid.step)),
    )


@dataclass
class ValueSurface:
    """Per-path, per-step values with barrier-contact flags.

    ``game_values[n, m]`` is the estimated game value on path n at step m
    (the switching engine stores y1 - y0 there and the mode values in
    ``y0``/``y1``).  ``exercise_region`` / ``cancel_region`` flag contact
    with the lower / upper barrier within ``REGION_TOL``; the last column is
    always False since the game settles there.
    """

    game_values: np.ndarray
    exercise_region: np.ndarray
    cancel_region: np.ndarray
    y0: Optional[np.ndarray] = None
    y1: Optional[np.ndarray] = None

    @property
    def n_steps(self) -> int:
        return self.game_values.shape[1] - 1


@dataclass(frozen=True)
class StoppingPair:
    """Per-path stop steps: sigma for the minimiser, tau for the maximiser.

    The index equals the step count M when the player never stops.
    """

    sigma: np.ndarray
    tau: np.ndarray


def _barriers_checked(spec: GameSpec, m: int, states: np.ndarray):
    low = np.asarray(spec.lower(m, states), dtype=float)
    up = np.asarray(spec.upper(m, states), dtype=float)
    bad = ~(up - low > 0.0)
    if np.any(bad):
        n = int(np.argmax(bad))
        raise ValueError(
            f"barrier gap violated at step {m}, path {n}: "
            f"upper={up[n]!r} <= lower={low[n]!r}"
        )
    return low, up


def _terminal_checked(spec: GameSpec, m: int, states: np.ndarray) -> np.ndarray:
    term = np.asarray(spec.terminal(states), dtype=float)
    low = np.asarray(spec.lower(m, states), dtype=float)
    up = np.asarray(spec.upper(m, states), dtype=float)
    bad = (term < low) | (term > up)
    if np.any(bad):
        n = int(np.argmax(bad))
        raise ValueError(
            f"terminal payoff outside barriers at step {m}, path {n}: "
            f"lower={low[n]!r}, terminal={term[n]!r}, upper={up[n]!r}"
        )
    return term


def _clamped_induction(paths: PathSet, spec: GameSpec, basis: RegressionBasis, use_upper: bool):
    """Backward induction min(U, max(L, fitted E[disc * V_next])) over the paths.

    With ``use_upper`` off the upper clamp is skipped, which prices the
    plain early-exercise (American) contract on the same paths.
    """
    prices = paths.prices
    n, m_steps = prices.shape[0], prices.shape[1] - 1
    disc = spec.step_discount

    values = np.empty((n, m_steps + 1))
    exercise = np.zeros((n, m_steps + 1), dtype=bool)
    cancel = np.zeros((n, m_steps + 1), dtype=bool)
    values[:, m_steps] = _terminal_checked(spec, m_steps, prices[:, m_steps])

    for m in range(m_steps - 1, 0, -1):
        states = prices[:, m]
        low, up = _barriers_checked(spec, m, states)
        cont = DesignSolver(basis.design_matrix(states)).fitted(disc * values[:, m + 1])
        v = np.maximum(low, cont)
        if use_upper:
            v = np.minimum(up, v)
        values[:, m] = v
        exercise[:, m] = np.abs(v - low) <= REGION_TOL
        cancel[:, m] = np.abs(v - up) <= REGION_TOL

    # Step 0: all paths share the initial state, so the conditional
    # expectation is the plain sample mean (a regression would be rank-1).
    low0, up0 = _barriers_checked(spec, 0, prices[:, 0])
    discounted = disc * values[:, 1]
    mean = float(np.mean(discounted))
    stderr = float(np.std(discounted, ddof=1) / np.sqrt(n))
    v0 = max(float(low0[0]), mean)
    if use_upper:
        v0 = min(float(up0[0]), v0)
    values[:, 0] = v0
    exercise[:, 0] = np.abs(v0 - low0) <= REGION_TOL
    cancel[:, 0] = np.abs(v0 - up0) <= REGION_TOL

    surface = ValueSurface(game_values=values, exercise_region=exercise, cancel_region=cancel)
    return surface, v0, stderr


def game_backward_induction(paths: PathSet, spec: GameSpec, basis: RegressionBasis):
    """Estimate the game value surface by the clamped LSMC recursion.

    Returns
    -------
    (ValueSurface, v0, stderr)
        ``v0`` is the clamped time-0 value; ``stderr`` the standard error
        of the pre-clamp sample mean.
    """
    return _clamped_induction(paths, spec, basis, use_upper=True)


def american_backward_induction(paths: PathSet, spec: GameSpec, basis: RegressionBasis):
    """Same recursion without the cancellation clamp (early exercise only)."""
    return _clamped_induction(paths, spec, basis, use_upper=False)


def switching_backward_induction(paths: PathSet, spec: GameSpec, basis: RegressionBasis):
    """Value both operating modes of the equivalent switching problem.

    Mode 1 holds the contract (terminal payoff, may step out by collecting
    the lower barrier); mode 0 is out (zero terminal, may step in by paying
    the upper barrier).  Ties between staying and switching break toward
    staying.  The same fitted operator (same paths, basis, factorisation)
    serves both modes, so y1 - y0 reproduces the clamped game recursion
    path by path.

    Returns
    -------
    (ValueSurface, y0_0, y1_0)
        The surface stores y1 - y0 as ``game_values`` plus both mode
        surfaces; barrier flags are derived from the difference.
    """
    prices = paths.prices
    n, m_steps = prices.shape[0], prices.shape[1] - 1
    disc = spec.step_discount

    y0 = np.empty((n, m_steps + 1))
    y1 = np.empty((n, m_steps + 1))
    exercise = np.zeros((n, m_steps + 1), dtype=bool)
    cancel = np.zeros((n, m_steps + 1), dtype=bool)
    y1[:, m_steps] = _terminal_checked(spec, m_steps, prices[:, m_steps])
    y0[:, m_steps] = 0.0

    for m in range(m_steps - 1, 0, -1):
        states = prices[:, m]
        low, up = _barriers_checked(spec, m, states)
        solver = DesignSolver(basis.design_matrix(states))
        fitted = solver.fitted(disc * np.stack([y0[:, m + 1], y1[:, m + 1]], axis=1))
        f0, f1 = fitted[:, 0], fitted[:, 1]
        y0[:, m] = np.maximum(f0, f1 - up)
        y1[:, m] = np.maximum(f1, f0 + low)
        diff = y1[:, m] - y0[:, m]
        exercise[:, m] = np.abs(diff - low) <= REGION_TOL
        cancel[:, m] = np.abs(diff - up) <= REGION_TOL

    low0, up0 = _barriers_checked(spec, 0, prices[:, 0])
    f0 = float(np.mean(disc * y0[:, 1]))
    f1 = float(np.mean(disc * y1[:, 1]))
    y0_0 = max(f0, f1 - float(up0[0]))
    y1_0 = max(f1, f0 + float(low0[0]))
    y0[:, 0] = y0_0
    y1[:, 0] = y1_0
    exercise[:, 0] = np.abs((y1_0 - y0_0) - low0) <= REGION_TOL
    cancel[:, 0] = np.abs((y1_0 - y0_0) - up0) <= REGION_TOL

    surface = ValueSurface(
        game_values=y1 - y0,
        exercise_region=exercise,
        cancel_region=cancel,
        y0=y0,
        y1=y1,
    )
    return surface, y0_0, y1_0


def extract_stopping_pair(surface: ValueSurface) -> StoppingPair:
    """First barrier-contact step per path: sigma on the upper, tau on the lower.

    Contact is read from the surface's region flags (set with absolute
    tolerance ``REGION_TOL`` when the surface was built); a path that never
    touches a barrier before the last step gets index M.
    """
    m_steps = surface.n_steps
    sigma = _first_true(surface.cancel_region[:, :m_steps], default=m_steps)
    tau = _first_true(surface.exercise_region[:, :m_steps], default=m_steps)
    return StoppingPair(sigma=sigma, tau=tau)


def _first_true(flags: np.ndarray, default: int) -> np.ndarray:
    idx = np.argmax(flags, axis=1)
    idx[~flags.any(axis=1)] = default
    return idx


def evaluate_pair(
    paths: PathSet,
    spec: GameSpec,
    pair: StoppingPair,
    tie_to_maximiser: bool = True,
) -> float:
    """Realised discounted game payoff of a stopping pair, averaged over paths.

    With ``tie_to_maximiser`` (the option convention) a simultaneous stop
    before the last step pays the lower barrier; the alternative convention
    awards ties to the minimiser, who then pays the upper barrier.  Both
    settle at the terminal payoff when sigma = tau = M.
    """
    prices = paths.prices
    n, m_steps = prices.shape[0], prices.shape[1] - 1
    sigma = np.asarray(pair.sigma)
    tau = np.asarray(pair.tau)
    if sigma.shape != (n,) or tau.shape != (n,):
        raise ValueError("stopping pair shape does not match the path set")
    if not (np.issubdtype(sigma.dtype, np.integer) and np.issubdtype(tau.dtype, np.integer)):
        raise ValueError("stop indices must be integer step counts")
    if np.any((sigma < 0) | (sigma > m_steps) | (tau < 0) | (tau > m_steps)):
        raise ValueError(f"stop indices must lie in [0, {m_steps}]")

    if tie_to_maximiser:
        tau_first = (tau <= sigma) & (tau < m_steps)
        sigma_first = (sigma < tau) & (sigma < m_steps)
    else:
        sigma_first = (sigma <= tau) & (sigma < m_steps)
        tau_first = (tau < sigma) & (tau < m_steps)

    disc_pow = spec.step_discount ** np.arange(m_steps + 1)
    cash = np.empty(n)
    stop_at = np.where(tau_first, tau, np.where(sigma_first, sigma, m_steps))
    states_at = prices[np.arange(n), stop_at]
    for m in np.unique(stop_at):
        sel = stop_at == m
        s = states_at[sel]
        amount = np.where(
            tau_first[sel],
            np.asarray(spec.lower(int(m), s), dtype=float),
            np.where(
                sigma_first[sel],
                np.asarray(spec.upper(int(m), s), dtype=float),
                np.asarray(spec.terminal(s), dtype=float),
            ),
        )
        cash[sel] = disc_pow[int(m)] * amount
    return float(np.mean(cash))
