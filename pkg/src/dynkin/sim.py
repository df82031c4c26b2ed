"""Seedable geometric Brownian motion simulation and vanilla payoffs.

Path generation is deterministic and scheduling-independent: a master seed
keys a counter-based generator, and each path (each antithetic pair when
pairing is on) draws from its own jumped stream.  Regenerating any single
path in isolation reproduces exactly the row of the full matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .market import CALL, MarketParams, TimeGrid

_MAX_SEED = 2**64

# Uniform draws are clipped to the open interval before the inverse normal
# CDF; the endpoints would map to +-inf.
_U_LO = 2.0**-53
_U_HI = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class PathSet:
    """Simulated price matrix, one row per path, column m = price at t_m."""

    prices: np.ndarray
    seed: int
    antithetic: bool
    grid: TimeGrid

    @property
    def n_paths(self) -> int:
        return self.prices.shape[0]

    @property
    def n_steps(self) -> int:
        return self.prices.shape[1] - 1


def payoff(kind: str, s, strike: float):
    """Exercise payoff: (s - strike)+ for a call, (strike - s)+ for a put."""
    if kind == CALL:
        return np.maximum(np.asarray(s, dtype=float) - strike, 0.0)
    return np.maximum(strike - np.asarray(s, dtype=float), 0.0)


def _unit_normals(seed: int, n_streams: int, steps: int) -> np.ndarray:
    """One independent standard-normal stream per row, derived from one seed.

    Row i comes from the master generator jumped i blocks ahead, so rows do
    not depend on the order (or concurrency) of generation.  Normals are the
    inverse CDF of uniform draws, which keeps them monotone in the uniforms.
    """
    base = np.random.Philox(key=np.uint64(seed))
    u = np.empty((n_streams, steps))
    for i in range(n_streams):
        u[i] = np.random.Generator(base.jumped(i)).random(steps)
    return ndtri(np.clip(u, _U_LO, _U_HI))


def simulate_paths(
    params: MarketParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    antithetic: bool = True,
) -> PathSet:
    """Simulate risk-neutral GBM paths on the grid.

    Each step multiplies the price by exp((r - rho^2/2) h + rho sqrt(h) xi)
    with xi standard normal.  With ``antithetic`` on, paths 2k and 2k+1 use
    draws xi and -xi step for step, so their log-increments sum to twice the
    drift exactly.

    Parameters
    ----------
    n_paths : int
        Number of paths, at least 2; must be even when ``antithetic``.
    seed : int
        Master seed in [0, 2**64).  Equal seeds give bit-identical output.

    Returns
    -------
    PathSet
        Immutable price matrix of shape (n_paths, grid.steps + 1).
    """
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 2:
        raise ValueError(f"n_paths must be an integer >= 2, got {n_paths!r}")
    if antithetic and n_paths % 2 != 0:
        raise ValueError(f"antithetic sampling needs an even path count, got {n_paths}")
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < _MAX_SEED:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")

    h = grid.step
    m = grid.steps
    if antithetic:
        xi_half = _unit_normals(int(seed), n_paths // 2, m)
        xi = np.empty((n_paths, m))
        xi[0::2] = xi_half
        xi[1::2] = -xi_half
    else:
        xi = _unit_normals(int(seed), n_paths, m)

    drift = (params.r - 0.5 * params.rho**2) * h
    increments = drift + params.rho * np.sqrt(h) * xi
    prices = np.empty((n_paths, m + 1))
    prices[:, 0] = params.s0
    prices[:, 1:] = params.s0 * np.exp(np.cumsum(increments, axis=1))
    prices.flags.writeable = False
    return PathSet(prices=prices, seed=int(seed), antithetic=antithetic, grid=grid)


def derived_seed(master_seed: int, *indices: int) -> int:
    """Stable 64-bit child seed for (master, run/horizon indices).

    Children for distinct index tuples are statistically independent, so
    replicated runs can execute in any order or in parallel.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, np.uint64)[0])
