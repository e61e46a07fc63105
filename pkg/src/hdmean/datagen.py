"""Synthetic grouped samples from the factor model x = mu + Gamma z.

Covariance scenarios are stored with their factors Gamma (Gamma Gamma^T
equal to the target covariance), computed once per scenario by Cholesky
factorization. Innovations z have i.i.d. coordinates from one of three
standardized laws (mean 0, variance 1). Generation is a pure function of
the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .sample import GroupedSample


class InnovationLaw(str, Enum):
    """Standardized innovation distributions (mean 0, variance 1)."""

    NORMAL = "normal"
    CHI_SQ_2 = "chisq2"  # (chi^2(2) - 2) / 2
    T4 = "t4"            # t(4) / sqrt(2)

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self is InnovationLaw.NORMAL:
            return rng.standard_normal(shape)
        if self is InnovationLaw.CHI_SQ_2:
            return (rng.chisquare(2, shape) - 2.0) / 2.0
        return rng.standard_t(4, shape) / math.sqrt(2.0)


class ScenarioKind(str, Enum):
    SCENARIO1 = "scenario1"  # identity / banded / their sum (unequal)
    SCENARIO2 = "scenario2"  # one shared banded covariance
    CUSTOM = "custom"


@dataclass(frozen=True)
class CovScenario:
    """Covariance targets plus factors for sampling, one per group."""

    kind: ScenarioKind
    covariances: tuple[np.ndarray, ...]
    factors: tuple[np.ndarray, ...]

    @property
    def k(self) -> int:
        return len(self.covariances)

    @property
    def p(self) -> int:
        return self.covariances[0].shape[0]


def ar1_covariance(p: int, decay: float = 0.5) -> np.ndarray:
    """Banded covariance with entries decay^|i-j|."""
    idx = np.arange(p)
    return decay ** np.abs(idx[:, None] - idx[None, :])


def build_scenario(kind: ScenarioKind, p: int, covariances=None) -> CovScenario:
    """Construct the covariance targets and Cholesky factors.

    scenario1: Sigma_1 = I, Sigma_2 = (0.5^|i-j|), Sigma_3 = Sigma_1 + Sigma_2.
    scenario2: all three groups share (0.5^|i-j|).
    custom: caller-provided positive definite covariances.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.SCENARIO1:
        banded = ar1_covariance(p)
        covs = [np.eye(p), banded, np.eye(p) + banded]
    elif kind is ScenarioKind.SCENARIO2:
        banded = ar1_covariance(p)
        covs = [banded, banded, banded]
    else:
        if covariances is None:
            raise ValueError("custom scenario requires explicit covariances")
        covs = [np.asarray(c, dtype=np.float64) for c in covariances]
        for c in covs:
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError("covariances must be square matrices")
    try:
        factors = [np.linalg.cholesky(c) for c in covs]
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"covariance is not positive definite: {exc}") from exc
    return CovScenario(
        kind=kind, covariances=tuple(covs), factors=tuple(factors)
    )


@dataclass(frozen=True)
class MeanConfig:
    """Mean vectors for the signal grid.

    Group 1 carries floor(p^(1-rho)) leading entries of size tau, the
    remaining groups have zero means. tau is derived from the signal
    strength r as sqrt(2 r sum_i(1/n_i) log p); r = 0 is the null
    configuration (all means zero).
    """

    rho: float
    r: float
    group_counts: tuple[int, ...]
    p: int
    tau: float = field(init=False)
    signal_count: int = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.r < 0.0:
            raise ValueError("r must be nonnegative")
        if self.p < 1:
            raise ValueError("p must be a positive integer")
        counts = tuple(int(n) for n in self.group_counts)
        if len(counts) < 2 or any(n < 4 for n in counts):
            raise ValueError("need at least two groups of at least 4 observations")
        object.__setattr__(self, "group_counts", counts)
        if self.r == 0.0:
            tau = 0.0
        else:
            tau = math.sqrt(
                2.0 * self.r * sum(1.0 / n for n in counts) * math.log(self.p)
            )
        object.__setattr__(self, "tau", tau)
        object.__setattr__(
            self, "signal_count", int(math.floor(self.p ** (1.0 - self.rho) + 1e-9))
        )

    @property
    def k(self) -> int:
        return len(self.group_counts)

    def means(self) -> list[np.ndarray]:
        mu1 = np.zeros(self.p)
        if self.tau > 0.0:
            mu1[: self.signal_count] = self.tau
        return [mu1] + [np.zeros(self.p) for _ in range(self.k - 1)]


def null_means(group_counts, p: int) -> MeanConfig:
    """All-zero mean configuration (r = 0)."""
    return MeanConfig(rho=0.0, r=0.0, group_counts=tuple(group_counts), p=p)


def sample_innovation(
    law: InnovationLaw, count: int, rng: np.random.Generator
) -> np.ndarray:
    """i.i.d. draws from a standardized innovation law."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return InnovationLaw(law).draw(rng, count)


def generate(
    scenario: CovScenario, means: MeanConfig, law: InnovationLaw, seed: int
) -> GroupedSample:
    """Draw one grouped sample; fully determined by the seed."""
    if scenario.p != means.p:
        raise ValueError(
            f"scenario dimension {scenario.p} does not match means p={means.p}"
        )
    if scenario.k != means.k:
        raise ValueError(
            f"scenario has {scenario.k} groups, means config has {means.k}"
        )
    law = InnovationLaw(law)
    rng = np.random.default_rng(seed)
    mean_vectors = means.means()
    blocks = []
    for i, n in enumerate(means.group_counts):
        z = law.draw(rng, (n, scenario.p))
        blocks.append(mean_vectors[i] + z @ scenario.factors[i].T)
    return GroupedSample(groups=tuple(blocks))
