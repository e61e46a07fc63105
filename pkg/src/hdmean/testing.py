"""End-to-end hypothesis test: statistic, variance estimate, decision.

The test is one-sided: the statistic's expectation is a nonnegative
quadratic form in the mean differences, so only the upper tail is
informative. A degenerate (non-positive) variance estimate is recorded
on the outcome instead of raised, so simulation harnesses can count it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr, ndtri

from .sample import GroupedSample, summarize
from .statistic import _tn_from_summaries
from .variance import DegenerateVariance, _sigma_hat_from_summaries
from .weights import WeightSpec, identity_weights


@dataclass(frozen=True)
class TestOutcome:
    """Result of one test run.

    On a degenerate replication ``sigma_hat``, ``z_score`` and ``p_value``
    are NaN, ``reject`` is False and ``degenerate`` is True.
    """

    t_n: float
    sigma_hat: float
    z_score: float
    p_value: float
    reject: bool
    level: float
    degenerate: bool


def normal_upper_quantile(theta: float) -> float:
    """z with 1 - Phi(z) = theta, for theta in (0, 1)."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie strictly between 0 and 1")
    return float(-ndtri(theta))


def run_test(sample: GroupedSample, w: WeightSpec, level: float) -> TestOutcome:
    """Run the weighted test at the given significance level."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    summaries = summarize(sample, w)
    stat = _tn_from_summaries(summaries, w)
    try:
        est = _sigma_hat_from_summaries(summaries, w)
    except DegenerateVariance:
        return TestOutcome(
            t_n=stat.t_n,
            sigma_hat=math.nan,
            z_score=math.nan,
            p_value=math.nan,
            reject=False,
            level=level,
            degenerate=True,
        )
    sigma_hat = math.sqrt(est.sigma_hat_sq)
    z = stat.t_n / sigma_hat
    p_value = float(ndtr(-z))  # upper tail, 1 - Phi(z)
    reject = stat.t_n >= sigma_hat * normal_upper_quantile(level)
    return TestOutcome(
        t_n=stat.t_n,
        sigma_hat=sigma_hat,
        z_score=z,
        p_value=p_value,
        reject=bool(reject),
        level=level,
        degenerate=False,
    )


def hb_test(sample: GroupedSample, level: float) -> TestOutcome:
    """Unweighted comparator: the same test with W = I."""
    return run_test(sample, identity_weights(sample.p), level)
