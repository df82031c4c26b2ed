"""Closed-form perpetual benchmarks for the cancellable call and put.

These infinite-horizon values are the asymptotes of the finite-horizon
sweeps.  The put depends on the perpetual American put value and, when the
penalty is small, on a threshold k* solved from a scalar root equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from .market import CALL, PUT, MarketParams

KSTAR_TOL = 1e-10


def perpetual_cancellable_call(params: MarketParams) -> float:
    """Perpetual cancellable call value: delta * s0 / K below the strike,
    s0 - K + delta above (the writer cancels immediately in the money)."""
    if params.kind != CALL:
        raise ValueError(f"expected a call contract, got kind={params.kind!r}")
    if params.s0 <= params.strike:
        return params.delta * params.s0 / params.strike
    return params.s0 - params.strike + params.delta


def perpetual_american_put(params: MarketParams, s):
    """Perpetual American put value at spot s.

    Exercise below s_exercise = beta K / (beta + 1) with beta = 2 r / rho^2;
    above it the value decays as (s / s_exercise)^-beta.
    """
    if not params.rho > 0.0:
        raise ValueError("perpetual values require rho > 0")
    beta = 2.0 * params.r / params.rho**2
    k = params.strike
    s_exercise = beta * k / (beta + 1.0)
    s_arr = np.asarray(s, dtype=float)
    value = np.where(
        s_arr <= s_exercise,
        k - s_arr,
        (k - s_exercise) * (np.maximum(s_arr, s_exercise) / s_exercise) ** (-beta),
    )
    return float(value) if np.isscalar(s) else value


def gamma_exponent(params: MarketParams) -> float:
    """Power-law exponent r / rho^2 + 1/2 of the perpetual put branches."""
    if not params.rho > 0.0:
        raise ValueError("perpetual values require rho > 0")
    return params.r / params.rho**2 + 0.5


def solve_kstar(params: MarketParams) -> float:
    """Threshold k* below which the small-penalty perpetual put is exercised.

    y = k*/K is the root in (0, 1) of  y^(2g) + 2g - 1 = 2g (1 + delta/K) y
    with g the gamma exponent.  The left end is positive (limit 2g - 1 > 0)
    and y = 1 gives -2g delta / K < 0, so bisection always brackets.
    Only defined in the small-penalty regime delta < delta*.
    """
    delta_star = perpetual_american_put(params, params.strike)
    if params.delta >= delta_star:
        raise ValueError(
            f"k* is undefined for delta={params.delta} >= delta*={delta_star}; "
            "the perpetual put equals the perpetual American put there"
        )
    g = gamma_exponent(params)
    coeff = 2.0 * g * (1.0 + params.delta / params.strike)

    def f(y):
        return y ** (2.0 * g) + 2.0 * g - 1.0 - coeff * y

    y = bisect(f, 1e-12, 1.0, xtol=KSTAR_TOL / 100.0)
    return params.strike * y


@dataclass(frozen=True)
class PerpetualParams:
    """Derived constants of the perpetual cancellable put."""

    gamma_exp: float
    delta_star: float
    k_star: Optional[float]

    @classmethod
    def from_market(cls, params: MarketParams) -> "PerpetualParams":
        delta_star = perpetual_american_put(params, params.strike)
        k_star = solve_kstar(params) if params.delta < delta_star else None
        return cls(gamma_exp=gamma_exponent(params), delta_star=delta_star, k_star=k_star)


def perpetual_cancellable_put(params: MarketParams) -> float:
    """Perpetual cancellable put value.

    Large penalty (delta >= delta* = perpetual American put at the strike):
    cancellation never pays and the value is the perpetual American put.
    Small penalty: immediate exercise below k*, a two-term power-law bridge
    on (k*, K), and delta (s0/K)^-(2g-1) at or above the strike.
    """
    if params.kind != PUT:
        raise ValueError(f"expected a put contract, got kind={params.kind!r}")
    s0, k, delta = params.s0, params.strike, params.delta
    delta_star = perpetual_american_put(params, k)
    if delta >= delta_star:
        return perpetual_american_put(params, s0)

    g = gamma_exponent(params)
    k_star = solve_kstar(params)
    if s0 <= k_star:
        return k - s0
    if s0 >= k:
        return delta * (s0 / k) ** (-(2.0 * g - 1.0))
    denom = (k_star / k) ** g - (k_star / k) ** (-g)
    exercise_term = (
        (k - k_star)
        * (s0 / k_star) ** (-(g - 1.0))
        * ((s0 / k) ** g - (s0 / k) ** (-g))
        / denom
    )
    cancel_term = (
        delta
        * (s0 / k) ** (-(g - 1.0))
        * ((s0 / k_star) ** (-g) - (s0 / k_star) ** g)
        / denom
    )
    return exercise_term + cancel_term


def perpetual_value(params: MarketParams) -> float:
    """Perpetual cancellable option value for either contract kind."""
    if params.kind == CALL:
        return perpetual_cancellable_call(params)
    return perpetual_cancellable_put(params)
