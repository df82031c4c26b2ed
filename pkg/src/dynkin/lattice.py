"""Recombining binomial-tree oracle with exact one-step expectations.

The tree provides exact (up to roundoff) discrete values to audit the Monte
Carlo engines: the clamped game recursion, the two switching-mode values,
evaluation of explicit switching schedules and stopping-rule pairs, and a
deviation audit of the saddle point.  Recursions run in extended precision
internally so node identities hold well inside 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .lsmc import GameSpec
from .market import MarketParams, TimeGrid

_LD = np.longdouble

# Slack for the saddle deviation audit; exact arithmetic would give 0.
SADDLE_TOL = 1e-10


@dataclass(frozen=True)
class LatticeModel:
    """CRR tree: up factor exp(rho sqrt(h)), down = 1/up, martingale prob_up."""

    params: MarketParams
    grid: TimeGrid
    up: float
    down: float
    prob_up: float

    @classmethod
    def build(cls, params: MarketParams, grid: TimeGrid) -> "LatticeModel":
        if not params.rho > 0.0:
            raise ValueError("lattice pricing requires rho > 0")
        h = grid.step
        up = float(np.exp(params.rho * np.sqrt(h)))
        down = 1.0 / up
        q = (np.exp(params.r * h) - down) / (up - down)
        if not 0.0 < q < 1.0:
            raise ValueError(
                f"transition probability {q} outside (0, 1); "
                f"the step h={h} is too coarse for r={params.r}, rho={params.rho}"
            )
        return cls(params=params, grid=grid, up=up, down=down, prob_up=float(q))

    def level_prices(self, m: int) -> np.ndarray:
        """Node prices s0 * up^j * down^(m-j), j = 0..m, in extended precision."""
        j = np.arange(m + 1)
        log_up = _LD(np.log(self.up))
        return _LD(self.params.s0) * np.exp((2 * j - m) * log_up)


def _one_step(q: np.longdouble, disc: np.longdouble, next_values: np.ndarray) -> np.ndarray:
    return disc * (q * next_values[1:] + (1.0 - q) * next_values[:-1])


def _tree_game(model: LatticeModel, spec: GameSpec, keep_levels: bool, keep_regions: bool):
    m_steps = model.grid.steps
    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)

    prices = model.level_prices(m_steps)
    v = np.asarray(spec.terminal(prices), dtype=_LD)
    levels: Optional[list] = [None] * (m_steps + 1) if keep_levels else None
    exercise: Optional[list] = [None] * m_steps if keep_regions else None
    cancel: Optional[list] = [None] * m_steps if keep_regions else None
    if keep_levels:
        levels[m_steps] = v.astype(float)

    for m in range(m_steps - 1, -1, -1):
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=_LD)
        up = np.asarray(spec.upper(m, prices), dtype=_LD)
        cont = _one_step(q, disc, v)
        if keep_regions:
            exercise[m] = np.asarray(cont <= low)
            cancel[m] = np.asarray(cont >= up) & ~exercise[m]
        v = np.minimum(up, np.maximum(low, cont))
        if keep_levels:
            levels[m] = v.astype(float)

    return levels, float(v[0]), exercise, cancel


def tree_game_value(model: LatticeModel, spec: GameSpec):
    """Exact clamped backward induction on the tree.

    Returns
    -------
    (levels, v0)
        ``levels[m]`` holds the m+1 node values at step m; ``v0`` the root.
    """
    levels, v0, _, _ = _tree_game(model, spec, keep_levels=True, keep_regions=False)
    return levels, v0


def tree_american_value(model: LatticeModel, spec: GameSpec):
    """Early-exercise-only recursion (no cancellation clamp) on the tree."""
    m_steps = model.grid.steps
    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)
    v = np.asarray(spec.terminal(model.level_prices(m_steps)), dtype=_LD)
    levels = [None] * (m_steps + 1)
    levels[m_steps] = v.astype(float)
    for m in range(m_steps - 1, -1, -1):
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=_LD)
        v = np.maximum(low, _one_step(q, disc, v))
        levels[m] = v.astype(float)
    return levels, float(v[0])


def tree_switching_values(model: LatticeModel, spec: GameSpec):
    """Exact switching-mode values on the tree.

    Mode 1 ends at the terminal payoff and may step out collecting the
    lower barrier; mode 0 ends at zero and may step in paying the upper
    barrier.  At every node y1 - y0 reproduces the clamped game value.

    Returns
    -------
    (y0_levels, y1_levels)
    """
    m_steps = model.grid.steps
    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)

    prices = model.level_prices(m_steps)
    y1 = np.asarray(spec.terminal(prices), dtype=_LD)
    y0 = np.zeros(m_steps + 1, dtype=_LD)
    y0_levels = [None] * (m_steps + 1)
    y1_levels = [None] * (m_steps + 1)
    y0_levels[m_steps] = y0.astype(float)
    y1_levels[m_steps] = y1.astype(float)

    for m in range(m_steps - 1, -1, -1):
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=_LD)
        up = np.asarray(spec.upper(m, prices), dtype=_LD)
        f0 = _one_step(q, disc, y0)
        f1 = _one_step(q, disc, y1)
        y0 = np.maximum(f0, f1 - up)
        y1 = np.maximum(f1, f0 + low)
        y0_levels[m] = y0.astype(float)
        y1_levels[m] = y1.astype(float)

    return y0_levels, y1_levels


def switching_policy_masks(model: LatticeModel, spec: GameSpec):
    """Strictly-better switch regions per mode, from the exact recursion.

    ``masks[i][m][j]`` is True when switching is strictly better than
    staying for mode i at node (m, j); ties break toward staying.  No node
    can be strict for both modes (the barrier gap forbids it).
    """
    m_steps = model.grid.steps
    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)
    y1 = np.asarray(spec.terminal(model.level_prices(m_steps)), dtype=_LD)
    y0 = np.zeros(m_steps + 1, dtype=_LD)
    switch0 = [None] * m_steps
    switch1 = [None] * m_steps
    for m in range(m_steps - 1, -1, -1):
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=_LD)
        up = np.asarray(spec.upper(m, prices), dtype=_LD)
        f0 = _one_step(q, disc, y0)
        f1 = _one_step(q, disc, y1)
        switch0[m] = np.asarray(f1 - up > f0)
        switch1[m] = np.asarray(f0 + low > f1)
        y0 = np.maximum(f0, f1 - up)
        y1 = np.maximum(f1, f0 + low)
    return switch0, switch1


@dataclass(frozen=True)
class SwitchingControl:
    """Deterministic alternating switch schedule: switch at each listed step.

    Steps must be strictly increasing (one switch per step at most) and lie
    before the last step; modes alternate starting from the initial mode
    passed to the evaluator.
    """

    switch_steps: tuple

    def __post_init__(self):
        steps = tuple(int(s) for s in self.switch_steps)
        object.__setattr__(self, "switch_steps", steps)
        if any(s < 0 for s in steps):
            raise ValueError(f"switch steps must be non-negative, got {steps}")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError(f"switch steps must be strictly increasing, got {steps}")


def evaluate_switching_control(
    model: LatticeModel,
    spec: GameSpec,
    control: SwitchingControl,
    initial_mode: int,
) -> float:
    """Exact expected reward of a deterministic switch schedule.

    The schedule earns the terminal payoff of the last mode held, minus the
    discounted cost of every switch: stepping 0 -> 1 pays the upper barrier
    at the switch node, stepping 1 -> 0 pays minus the lower barrier.
    """
    if initial_mode not in (0, 1):
        raise ValueError(f"initial_mode must be 0 or 1, got {initial_mode!r}")
    m_steps = model.grid.steps
    steps = control.switch_steps
    if steps and steps[-1] >= m_steps:
        raise ValueError(f"switch steps must precede the last step {m_steps}, got {steps}")

    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)
    final_mode = initial_mode ^ (len(steps) & 1)
    prices = model.level_prices(m_steps)
    w = (
        np.asarray(spec.terminal(prices), dtype=_LD)
        if final_mode == 1
        else np.zeros(m_steps + 1, dtype=_LD)
    )

    switch_at = set(steps)
    mode_after = final_mode
    for m in range(m_steps - 1, -1, -1):
        w = _one_step(q, disc, w)
        if m in switch_at:
            prices = model.level_prices(m)
            if mode_after == 1:  # switched 0 -> 1 at this step
                w = w - np.asarray(spec.upper(m, prices), dtype=_LD)
            else:  # switched 1 -> 0
                w = w + np.asarray(spec.lower(m, prices), dtype=_LD)
            mode_after ^= 1
    return float(w[0])


def evaluate_switching_policy(
    model: LatticeModel,
    spec: GameSpec,
    switch0_masks: Sequence[np.ndarray],
    switch1_masks: Sequence[np.ndarray],
    initial_mode: int,
) -> float:
    """Exact expected reward of node-indexed switch regions (one per mode)."""
    if initial_mode not in (0, 1):
        raise ValueError(f"initial_mode must be 0 or 1, got {initial_mode!r}")
    m_steps = model.grid.steps
    q = _LD(model.prob_up)
    disc = _LD(spec.step_discount)
    w1 = np.asarray(spec.terminal(model.level_prices(m_steps)), dtype=_LD)
    w0 = np.zeros(m_steps + 1, dtype=_LD)
    for m in range(m_steps - 1, -1, -1):
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=_LD)
        up = np.asarray(spec.upper(m, prices), dtype=_LD)
        f0 = _one_step(q, disc, w0)
        f1 = _one_step(q, disc, w1)
        w0 = np.where(switch0_masks[m], f1 - up, f0)
        w1 = np.where(switch1_masks[m], f0 + low, f1)
    return float((w1 if initial_mode == 1 else w0)[0])


def game_stopping_regions(model: LatticeModel, spec: GameSpec):
    """Barrier-contact node sets of the exact game recursion.

    Returns per-level boolean masks (steps 0..M-1): ``exercise[m][j]`` marks
    value pinned to the lower barrier, ``cancel[m][j]`` to the upper.  These
    are the debut regions whose first-entry times form the saddle point.
    """
    _, _, exercise, cancel = _tree_game(model, spec, keep_levels=False, keep_regions=True)
    return exercise, cancel


def evaluate_stopping_rules(
    model: LatticeModel,
    spec: GameSpec,
    cancel_masks: Sequence[np.ndarray],
    exercise_masks: Sequence[np.ndarray],
    tie_to_maximiser: bool = True,
) -> float:
    """Exact game payoff when both players stop at first entry into node sets.

    ``cancel_masks`` drive the minimiser (pays the upper barrier),
    ``exercise_masks`` the maximiser (collects the lower barrier); ties
    before the last step go to the maximiser unless flagged otherwise.
    """
    values = _stopping_family_values(
        model,
        spec,
        lambda m, width: np.asarray(exercise_masks[m], dtype=bool)[None, :],
        lambda m, width: np.asarray(cancel_masks[m], dtype=bool)[None, :],
        n_rules=1,
        tie_to_maximiser=tie_to_maximiser,
    )
    return float(values[0])


def _stopping_family_values(
    model: LatticeModel,
    spec: GameSpec,
    exercise_fn: Callable[[int, int], np.ndarray],
    cancel_fn: Callable[[int, int], np.ndarray],
    n_rules: int,
    tie_to_maximiser: bool = True,
) -> np.ndarray:
    """Vectorised payoff of a family of stopping-rule pairs.

    ``exercise_fn(m, width)`` / ``cancel_fn(m, width)`` return boolean masks
    broadcastable to (n_rules, width) marking stop nodes at level m.
    """
    m_steps = model.grid.steps
    q = model.prob_up
    disc = spec.step_discount
    term = np.asarray(spec.terminal(model.level_prices(m_steps)), dtype=float)
    d = np.broadcast_to(term, (n_rules, m_steps + 1)).copy()
    for m in range(m_steps - 1, -1, -1):
        width = m + 1
        prices = model.level_prices(m)
        low = np.asarray(spec.lower(m, prices), dtype=float)
        up = np.asarray(spec.upper(m, prices), dtype=float)
        cont = disc * (q * d[:, 1 : width + 1] + (1.0 - q) * d[:, :width])
        ex = exercise_fn(m, width)
        ca = cancel_fn(m, width)
        if tie_to_maximiser:
            d = np.where(ex, low, np.where(ca, up, cont))
        else:
            d = np.where(ca, up, np.where(ex, low, cont))
    return d[:, 0]


def _threshold_grid(m_steps: int) -> np.ndarray:
    """All per-level thresholds t_m in {-1..m}; -1 disables the level."""
    ranges = [np.arange(-1, m + 1, dtype=np.int64) for m in range(m_steps)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def _random_masks(m_steps: int, n_rules: int, rng: np.random.Generator) -> list:
    density = rng.uniform(0.05, 0.6, size=n_rules)
    return [
        rng.random((n_rules, m + 1)) < density[:, None] for m in range(m_steps)
    ]


@dataclass(frozen=True)
class SaddleReport:
    """Outcome of the saddle deviation audit.

    ``worst_tau_margin`` is the largest improvement any audited maximiser
    deviation achieved over the candidate pair (positive = violation beyond
    roundoff), ``worst_sigma_margin`` the same for the minimiser side, and
    ``pair_gap`` the |pair value - tree value| discrepancy.
    """

    game_value: float
    pair_value: float
    worst_tau_margin: float
    worst_sigma_margin: float
    pair_gap: float
    n_exhaustive: int
    n_random: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.worst_tau_margin <= self.tolerance
            and self.worst_sigma_margin <= self.tolerance
            and self.pair_gap <= self.tolerance
        )


def tree_saddle_check(
    model: LatticeModel,
    spec: GameSpec,
    n_random_deviations: int = 200,
    seed: int = 0,
    exhaustive: bool = True,
    tolerance: float = SADDLE_TOL,
) -> SaddleReport:
    """Audit the saddle property of the first-contact stopping pair.

    The candidate pair stops at first entry into the exact barrier-contact
    regions.  Against it we evaluate unilateral deviations: every monotone
    per-level threshold rule (both orientations; requires steps <= 8) plus
    random node-set rules, on each side.  No deviation may improve its
    player's payoff by more than ``tolerance``.
    """
    m_steps = model.grid.steps
    if exhaustive and m_steps > 8:
        raise ValueError(f"exhaustive audit supports at most 8 steps, got {m_steps}")

    exercise_star, cancel_star = game_stopping_regions(model, spec)
    _, v0 = tree_game_value(model, spec)
    star_ex = lambda m, width: exercise_star[m][None, :]
    star_ca = lambda m, width: cancel_star[m][None, :]
    pair_value = float(
        _stopping_family_values(model, spec, star_ex, star_ca, n_rules=1)[0]
    )

    # the candidate pair is itself a member of each deviation set
    worst_tau = pair_value
    worst_sigma = pair_value
    n_exhaustive = 0

    def run_tau_family(mask_fn, n_rules):
        nonlocal worst_tau
        vals = _stopping_family_values(model, spec, mask_fn, star_ca, n_rules)
        worst_tau = max(worst_tau, float(vals.max()))

    def run_sigma_family(mask_fn, n_rules):
        nonlocal worst_sigma
        vals = _stopping_family_values(model, spec, star_ex, mask_fn, n_rules)
        worst_sigma = min(worst_sigma, float(vals.min()))

    if exhaustive:
        thresholds = _threshold_grid(m_steps)
        n_thr = thresholds.shape[0]
        j_rows = [np.arange(m + 1)[None, :] for m in range(m_steps)]
        lower_fn = lambda m, width: j_rows[m] <= thresholds[:, m : m + 1]
        upper_fn = lambda m, width: j_rows[m] >= (m - thresholds[:, m : m + 1])
        for fn in (lower_fn, upper_fn):
            run_tau_family(fn, n_thr)
            run_sigma_family(fn, n_thr)
        n_exhaustive = 2 * n_thr

    if n_random_deviations > 0:
        rng = np.random.default_rng(seed)
        for side in ("tau", "sigma"):
            masks = _random_masks(m_steps, n_random_deviations, rng)
            fn = lambda m, width: masks[m]
            if side == "tau":
                run_tau_family(fn, n_random_deviations)
            else:
                run_sigma_family(fn, n_random_deviations)

    return SaddleReport(
        game_value=v0,
        pair_value=pair_value,
        worst_tau_margin=float(worst_tau - pair_value),
        worst_sigma_margin=float(pair_value - worst_sigma),
        pair_gap=abs(pair_value - v0),
        n_exhaustive=n_exhaustive,
        n_random=2 * max(n_random_deviations, 0),
        tolerance=tolerance,
    )
