"""Cross-sectional polynomial least squares for one-step conditional expectations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Singular values below this fraction of the largest are treated as zero,
# giving the minimal-norm solution on degenerate cross-sections.
RANK_RCOND = 1e-10


@dataclass(frozen=True)
class RegressionBasis:
    """Monomials 1, phi, ..., phi^degree of the normalised state phi = s / scale.

    Normalising by a price scale (the strike, in the option engines) keeps
    the columns comparably sized without changing the fitted subspace.
    """

    degree: int
    scale: float

    def __post_init__(self):
        if not (isinstance(self.degree, (int, np.integer)) and self.degree >= 0):
            raise ValueError(f"degree must be an integer >= 0, got {self.degree!r}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def n_features(self) -> int:
        return self.degree + 1

    def design_matrix(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        return np.vander(states / self.scale, self.n_features, increasing=True)


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    residual_norm: float
    rank: int


class DesignSolver:
    """Least-squares fit of one design matrix, reusable across target vectors.

    Factoring the matrix once and applying it to every target keeps the
    fitted-value operator a single linear map, which the backward inductions
    rely on (fitting a difference must equal the difference of the fits).
    """

    def __init__(self, design: np.ndarray):
        design = np.asarray(design, dtype=float)
        if design.ndim != 2 or design.shape[0] == 0:
            raise ValueError(f"design matrix must be 2-D and non-empty, got shape {design.shape}")
        u, s, vt = np.linalg.svd(design, full_matrices=False)
        keep = s > RANK_RCOND * s[0] if s.size else np.zeros(0, dtype=bool)
        self.design = design
        self.rank = int(np.count_nonzero(keep))
        self._u = u[:, keep]
        self._sinv = 1.0 / s[keep]
        self._v = vt[keep].T

    def coefficients(self, targets: np.ndarray) -> np.ndarray:
        """Minimal-norm coefficients; targets may be (n,) or (n, k)."""
        targets = np.asarray(targets, dtype=float)
        if targets.ndim == 1:
            return self._v @ (self._sinv * (self._u.T @ targets))
        return self._v @ (self._sinv[:, None] * (self._u.T @ targets))

    def fitted(self, targets: np.ndarray) -> np.ndarray:
        """Fitted values of the regression evaluated at the design states."""
        return self.design @ self.coefficients(targets)


def _validate_pair(states, targets, basis: RegressionBasis):
    states = np.asarray(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if states.ndim != 1 or targets.ndim != 1:
        raise ValueError("states and targets must be 1-D vectors")
    if states.size == 0:
        raise ValueError("empty regression input")
    if states.shape != targets.shape:
        raise ValueError(f"length mismatch: {states.size} states vs {targets.size} targets")
    if states.size < basis.n_features:
        raise ValueError(
            f"need at least {basis.n_features} observations for degree {basis.degree}, "
            f"got {states.size}"
        )
    return states, targets


def fit_least_squares(states, targets, basis: RegressionBasis) -> FitResult:
    """Least-squares fit of targets on the basis features of states.

    Rank-deficient designs return the minimal-norm minimiser.
    """
    states, targets = _validate_pair(states, targets, basis)
    solver = DesignSolver(basis.design_matrix(states))
    coef = solver.coefficients(targets)
    resid = float(np.linalg.norm(targets - solver.design @ coef))
    return FitResult(coefficients=coef, residual_norm=resid, rank=solver.rank)


def conditional_expectation(states_now, values_next, basis: RegressionBasis) -> np.ndarray:
    """Fitted values of values_next regressed on states_now, one per state.

    The map values_next -> fitted values is linear, exact up to floating
    point, and invariant under reordering the (state, value) pairs.
    """
    states_now, values_next = _validate_pair(states_now, values_next, basis)
    return DesignSolver(basis.design_matrix(states_now)).fitted(values_next)
