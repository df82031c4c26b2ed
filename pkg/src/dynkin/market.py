"""Market and time-grid primitives shared by all pricing engines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CALL = "call"
PUT = "put"
KINDS = (CALL, PUT)


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market together with the cancellable-contract terms.

    Parameters
    ----------
    r : float
        Risk-free rate (1/year), strictly positive.
    rho : float
        Volatility (1/sqrt-year).  ``rho == 0`` is tolerated so the path
        simulator can be exercised on deterministic paths; pricing entry
        points (lattice, CLI) require ``rho > 0``.
    s0 : float
        Initial asset price.
    strike : float
        Strike K.
    delta : float
        Penalty the writer pays on top of the exercise payoff when
        cancelling early.  Must be strictly positive: the game needs a
        strict gap between the exercise and cancellation barriers.
    kind : str
        ``"call"`` or ``"put"``.
    """

    r: float
    rho: float
    s0: float
    strike: float
    delta: float
    kind: str

    def __post_init__(self):
        if not self.r > 0.0:
            raise ValueError(f"risk-free rate must be positive, got r={self.r}")
        if self.rho < 0.0:
            raise ValueError(f"volatility must be non-negative, got rho={self.rho}")
        if not self.s0 > 0.0:
            raise ValueError(f"initial price must be positive, got s0={self.s0}")
        if not self.strike > 0.0:
            raise ValueError(f"strike must be positive, got strike={self.strike}")
        if not self.delta > 0.0:
            raise ValueError(
                f"cancellation penalty must be strictly positive, got delta={self.delta}"
            )
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_M = horizon with step h = horizon / steps."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise ValueError(f"steps must be an integer >= 1, got {self.steps!r}")

    @property
    def step(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)
