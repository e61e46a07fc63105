"""Structured weight matrices of the form W = diag(omega_sq) + alpha alpha^T.

The weight matrix is never stored densely on production paths: quadratic
forms x^T W y and products W x are evaluated in O(p) from the two defining
vectors. ``materialize`` builds the dense matrix for tests and small-p
diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MATERIALIZE_LIMIT = 5000


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class WeightSpec:
    """Diagonal-plus-rank-one weight matrix, stored as its two vectors.

    ``omega_sq`` holds the squared diagonal entries (the squares are what
    every formula consumes, so they are stored directly). ``alpha`` is the
    rank-one direction. Instances are immutable and safe to share.
    """

    omega_sq: np.ndarray
    alpha: np.ndarray

    def __post_init__(self) -> None:
        omega_sq = _as_vector(self.omega_sq, "omega_sq")
        alpha = _as_vector(self.alpha, "alpha")
        if omega_sq.shape != alpha.shape:
            raise ValueError(
                f"omega_sq and alpha must have equal length, got "
                f"{omega_sq.shape[0]} and {alpha.shape[0]}"
            )
        if omega_sq.shape[0] < 1:
            raise ValueError("dimension must be at least 1")
        if not np.all(omega_sq > 0):
            raise ValueError("all omega_sq entries must be strictly positive")
        omega_sq = omega_sq.copy()
        alpha = alpha.copy()
        omega_sq.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "omega_sq", omega_sq)
        object.__setattr__(self, "alpha", alpha)

    @property
    def p(self) -> int:
        return self.omega_sq.shape[0]

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.p:
            raise ValueError(f"vector length {x.shape[-1]} does not match p={self.p}")
        return x

    def quad_form(self, x, y) -> float:
        """x^T W y in O(p): sum(omega_sq * x * y) + (alpha.x)(alpha.y)."""
        x = self._check_dim(x)
        y = self._check_dim(y)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("quad_form expects 1-d vectors")
        return float((self.omega_sq * x) @ y + (self.alpha @ x) * (self.alpha @ y))

    def apply(self, x) -> np.ndarray:
        """W x in O(p)."""
        x = self._check_dim(x)
        if x.ndim != 1:
            raise ValueError("apply expects a 1-d vector")
        return self.omega_sq * x + self.alpha * (self.alpha @ x)

    def apply_rows(self, rows) -> np.ndarray:
        """Row-wise product X W for an (n, p) matrix, in O(n p)."""
        rows = self._check_dim(rows)
        if rows.ndim != 2:
            raise ValueError("apply_rows expects an (n, p) matrix")
        return rows * self.omega_sq + np.outer(rows @ self.alpha, self.alpha)

    def gram(self, rows_a, rows_b) -> np.ndarray:
        """Cross Gram matrix A W B^T with entries a_i^T W b_j."""
        rows_a = self._check_dim(rows_a)
        rows_b = self._check_dim(rows_b)
        return self.apply_rows(rows_a) @ np.asarray(rows_b, dtype=np.float64).T

    def materialize(self) -> np.ndarray:
        """Dense W = diag(omega_sq) + alpha alpha^T. Test/diagnostic use only."""
        if self.p > _MATERIALIZE_LIMIT:
            raise ValueError(
                f"refusing to materialize a {self.p}x{self.p} matrix "
                f"(limit {_MATERIALIZE_LIMIT})"
            )
        return np.diag(self.omega_sq) + np.outer(self.alpha, self.alpha)


def default_weights(p: int) -> WeightSpec:
    """Default weighting used by the simulation studies.

    Diagonal entries grow linearly across coordinates,
    omega_q = sqrt(2) (1 + q / (2p)) for q = 1..p, and the rank-one
    direction is constant, alpha_q = sqrt(5) p^(-3/8). The constant
    direction amplifies dense signals while the diagonal keeps every
    coordinate weighted away from zero.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    q = np.arange(1, p + 1, dtype=np.float64)
    omega_sq = 2.0 * (1.0 + q / (2.0 * p)) ** 2
    alpha = np.full(p, math.sqrt(5.0) * p ** (-0.375))
    return WeightSpec(omega_sq=omega_sq, alpha=alpha)


def identity_weights(p: int) -> WeightSpec:
    """W = I, the unweighted comparator (omega_sq all one, alpha zero)."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    return WeightSpec(omega_sq=np.ones(p), alpha=np.zeros(p))
