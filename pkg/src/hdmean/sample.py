"""Grouped observation data and the per-group sufficient statistics.

Observations are stored row-major (one row per observation). Validation
happens once at construction: every downstream estimator requires at
least four observations per group, so smaller groups are rejected here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .weights import WeightSpec

MIN_GROUP_SIZE = 4


@dataclass(frozen=True)
class GroupedSample:
    """k groups of p-dimensional observations, group i an (n_i, p) block."""

    groups: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        blocks = []
        for i, g in enumerate(self.groups):
            arr = np.asarray(g, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"group {i} must be a 2-d (n_i, p) array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"group {i} contains non-finite values")
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            blocks.append(arr)
        if len(blocks) < 2:
            raise ValueError("at least two groups are required")
        p = blocks[0].shape[1]
        for i, b in enumerate(blocks):
            if b.shape[1] != p:
                raise ValueError(
                    f"group {i} has dimension {b.shape[1]}, expected {p}"
                )
            if b.shape[0] < MIN_GROUP_SIZE:
                raise ValueError(
                    f"group {i} has {b.shape[0]} observations; "
                    f"at least {MIN_GROUP_SIZE} are required"
                )
        object.__setattr__(self, "groups", tuple(blocks))

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].shape[1]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)


@dataclass(frozen=True)
class GroupSummary:
    """Sufficient statistics of one group under a fixed weight matrix.

    ``total`` is the coordinate-wise sum, ``mean`` = total / n_i,
    ``centered`` the mean-subtracted block, and ``self_w[j]`` the
    weighted self-product x_j^T W x_j of the raw j-th observation.
    """

    total: np.ndarray
    mean: np.ndarray
    centered: np.ndarray
    self_w: np.ndarray

    @property
    def n(self) -> int:
        return self.centered.shape[0]


def summarize(sample: GroupedSample, w: WeightSpec) -> list[GroupSummary]:
    """Compute per-group summaries in O(sum n_i * p)."""
    if w.p != sample.p:
        raise ValueError(f"weight dimension {w.p} does not match sample p={sample.p}")
    out = []
    for block in sample.groups:
        total = block.sum(axis=0)
        mean = total / block.shape[0]
        centered = block - mean
        self_w = np.einsum("ij,ij->i", block, w.apply_rows(block))
        out.append(
            GroupSummary(total=total, mean=mean, centered=centered, self_w=self_w)
        )
    return out
