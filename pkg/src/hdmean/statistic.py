"""The weighted mean-comparison statistic and its known-parameter moments.

The statistic is a U-statistic: within each group the diagonal-free sum
sum_{j1 != j2} x_j1^T W x_j2 is folded through the group total,
sum_{j1 != j2} x_j1^T W x_j2 = T^T W T - sum_j x_j^T W x_j,
which is an exact identity and reduces the cost from O(n^2 p) to O(n p).
``compute_tn_naive`` evaluates the literal double sums and serves as the
oracle for the fast path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sample import GroupedSample, GroupSummary, summarize
from .weights import WeightSpec

_NAIVE_TOTAL_LIMIT = 500
_DENSE_P_LIMIT = 2000


@dataclass(frozen=True)
class StatisticValue:
    """Statistic value plus its within/cross decomposition.

    t_n = (k-1) * sum_i per_group_within[i] - sum_{i<l} cross_terms[(i,l)].
    """

    t_n: float
    per_group_within: np.ndarray
    cross_terms: dict[tuple[int, int], float]


def _tn_from_summaries(
    summaries: list[GroupSummary], w: WeightSpec
) -> StatisticValue:
    k = len(summaries)
    within = np.empty(k)
    w_totals = [w.apply(s.total) for s in summaries]
    for i, s in enumerate(summaries):
        n = s.n
        within[i] = (s.total @ w_totals[i] - s.self_w.sum()) / (n * (n - 1))
    cross: dict[tuple[int, int], float] = {}
    for i in range(k):
        for l in range(i + 1, k):
            ni, nl = summaries[i].n, summaries[l].n
            cross[(i, l)] = 2.0 * float(summaries[i].total @ w_totals[l]) / (ni * nl)
    t_n = (k - 1) * float(within.sum()) - sum(cross.values())
    return StatisticValue(t_n=t_n, per_group_within=within, cross_terms=cross)


def compute_tn(sample: GroupedSample, w: WeightSpec) -> StatisticValue:
    """Evaluate the statistic in O(sum n_i p + k^2 p)."""
    return _tn_from_summaries(summarize(sample, w), w)


def compute_tn_naive(sample: GroupedSample, w: WeightSpec) -> float:
    """Literal double-sum evaluation (O(n^2 p) oracle, guarded)."""
    total_n = sum(sample.counts)
    if total_n > _NAIVE_TOTAL_LIMIT:
        raise ValueError(
            f"naive evaluation limited to {_NAIVE_TOTAL_LIMIT} total "
            f"observations, got {total_n}"
        )
    k = sample.k
    within = 0.0
    for block in sample.groups:
        n = block.shape[0]
        acc = 0.0
        for j1 in range(n):
            for j2 in range(n):
                if j1 != j2:
                    acc += w.quad_form(block[j1], block[j2])
        within += acc / (n * (n - 1))
    cross = 0.0
    for i in range(k):
        for l in range(i + 1, k):
            bi, bl = sample.groups[i], sample.groups[l]
            acc = 0.0
            for j1 in range(bi.shape[0]):
                for j2 in range(bl.shape[0]):
                    acc += w.quad_form(bi[j1], bl[j2])
            cross += 2.0 * acc / (bi.shape[0] * bl.shape[0])
    return (k - 1) * within - cross


def expected_tn(means, w: WeightSpec) -> float:
    """sum_{i<l} (mu_i - mu_l)^T W (mu_i - mu_l) from known means."""
    vecs = [np.asarray(m, dtype=np.float64) for m in means]
    for m in vecs:
        if m.shape != (w.p,):
            raise ValueError(f"mean vector shape {m.shape} does not match p={w.p}")
    total = 0.0
    for i in range(len(vecs)):
        for l in range(i + 1, len(vecs)):
            d = vecs[i] - vecs[l]
            total += w.quad_form(d, d)
    return total


def true_variance_tn(covs, means, counts, w: WeightSpec) -> float:
    """Exact variance of the statistic from known covariances and means.

    Three terms: within-group trace terms 2(k-1)^2/(n_i(n_i-1)) tr(W S_i)^2,
    cross terms 4/(n_i n_l) tr(W S_i W S_l), and a mean-dependent term
    4/n_i m_i^T W S_i W m_i with m_i = sum_l mu_l - k mu_i (zero under the
    null). Dense-trace path, guarded at p <= 2000.
    """
    if w.p > _DENSE_P_LIMIT:
        raise ValueError(f"dense variance limited to p <= {_DENSE_P_LIMIT}")
    covs = [np.asarray(c, dtype=np.float64) for c in covs]
    vecs = [np.asarray(m, dtype=np.float64) for m in means]
    counts = [int(n) for n in counts]
    k = len(covs)
    if not (len(vecs) == len(counts) == k):
        raise ValueError("covs, means and counts must have equal length")
    for c in covs:
        if c.shape != (w.p, w.p):
            raise ValueError(f"covariance shape {c.shape} does not match p={w.p}")
    for m in vecs:
        if m.shape != (w.p,):
            raise ValueError(f"mean vector shape {m.shape} does not match p={w.p}")
    if any(n < 2 for n in counts):
        raise ValueError("every group count must be at least 2")
    w_dense = w.materialize()
    wc = [w_dense @ c for c in covs]
    var = 0.0
    for i in range(k):
        n = counts[i]
        var += 2.0 * (k - 1) ** 2 / (n * (n - 1)) * float(np.sum(wc[i] * wc[i].T))
    for i in range(k):
        for l in range(i + 1, k):
            var += 4.0 / (counts[i] * counts[l]) * float(np.sum(wc[i] * wc[l].T))
    mean_sum = np.sum(vecs, axis=0)
    for i in range(k):
        m_i = mean_sum - k * vecs[i]
        wm = w_dense @ m_i
        var += 4.0 / counts[i] * float(wm @ covs[i] @ wm)
    return var
