"""Trace estimators and the variance estimate for the test statistic.

Two families per trace:

* ``*_raw`` evaluate the defining U-statistics literally (permutation
  sums over pairwise-distinct indices). They are exactly unbiased and
  translation invariant, and serve as the ground-truth oracles. Cost is
  O(n^4) within / O(n_i^2 n_l^2) across, so both are size-guarded.
* ``*_simplified`` evaluate algebraically equal closed forms on centered
  data in O(n^2 p). The within form below matches the raw U-statistic
  exactly (verified in rational arithmetic; see the test suite). The
  cross form returns the centered double sum with 1/n divisors and
  equals the raw U-statistic only after the deterministic factor
  ``cross_trace_correction``; the assembled estimate applies it, so the
  final variance estimate is the unbiased raw-form value.

A non-positive assembled estimate raises ``DegenerateVariance`` rather
than being clamped; callers that need to count degenerate replications
catch it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .sample import GroupedSample, GroupSummary, summarize
from .weights import WeightSpec

_RAW_WITHIN_LIMIT = 12
_RAW_CROSS_LIMIT = 400
_DENSE_P_LIMIT = 2000


class DegenerateVariance(ArithmeticError):
    """Raised when the assembled variance estimate is non-positive."""


@dataclass(frozen=True)
class VarianceEstimate:
    """Assembled variance estimate with its trace components.

    sigma_hat_sq = sum_i 2(k-1)^2/(n_i(n_i-1)) within_traces[i]
                 + sum_{i<l} 4/(n_i n_l) cross_traces[(i,l)].

    ``cross_traces`` holds the unbiased (raw-equivalent) values, i.e. the
    simplified centered sums with the correction factor already applied.
    """

    sigma_hat_sq: float
    within_traces: np.ndarray
    cross_traces: dict[tuple[int, int], float]


def within_trace_simplified(group: GroupSummary, w: WeightSpec, n_i: int) -> float:
    """Estimate tr(W S_i)^2 from centered rows, equal to the raw form.

    With Q the W-Gram of the centered rows, the raw four-index U-statistic
    reduces exactly to

        sum(Q^2) / (n(n-3)) - sum(diag(Q)^2) / ((n-2)(n-3)) + tr(Q)^2 / P4

    where P4 = n(n-1)(n-2)(n-3). The middle coefficient differs from the
    1/((n-1)(n-2)) sometimes quoted for this reduction; the raw-oracle
    equivalence tests pin the version used here.
    """
    n = group.n
    if n_i != n:
        raise ValueError(f"n_i={n_i} does not match group size {n}")
    if n < 4:
        raise ValueError("within-group trace estimation requires n_i >= 4")
    gram = group.centered @ w.apply_rows(group.centered).T
    full_sq = float(np.sum(gram * gram))
    diag = np.diagonal(gram)
    diag_sq = float(diag @ diag)
    trace = float(diag.sum())
    p4 = n * (n - 1) * (n - 2) * (n - 3)
    return (
        full_sq / (n * (n - 3))
        - diag_sq / ((n - 2) * (n - 3))
        + trace * trace / p4
    )


def within_trace_raw(data, w: WeightSpec) -> float:
    """Literal permutation-sum estimator of tr(W S_i)^2 (oracle, O(n^4)).

    Three sums over pairwise-distinct ordered index tuples with falling
    factorial normalizers P^r_n = n!/(n-r)!:

        (1/P2) sum_{j1 != j2} (x_j1^T W x_j2)^2
      - (2/P3) sum_{j1 != j2 != j3} x_j1^T W x_j2 * x_j3^T W x_j1
      + (1/P4) sum_{j1 != j2 != j3 != j4} x_j1^T W x_j2 * x_j3^T W x_j4.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n < 4:
        raise ValueError("raw within-group trace estimation requires n >= 4")
    if n > _RAW_WITHIN_LIMIT:
        raise ValueError(
            f"raw within-group estimator limited to n <= {_RAW_WITHIN_LIMIT}"
        )
    prod = data @ w.apply_rows(data).T
    p2 = n * (n - 1)
    p3 = p2 * (n - 2)
    p4 = p3 * (n - 3)
    t1 = sum(prod[a, b] ** 2 for a, b in itertools.permutations(range(n), 2))
    t2 = sum(
        prod[a, b] * prod[c, a]
        for a, b, c in itertools.permutations(range(n), 3)
    )
    t3 = sum(
        prod[a, b] * prod[c, d]
        for a, b, c, d in itertools.permutations(range(n), 4)
    )
    return t1 / p2 - 2.0 * t2 / p3 + t3 / p4


def cross_trace_simplified(
    g_i: GroupSummary, g_l: GroupSummary, w: WeightSpec
) -> float:
    """Centered double sum (1/(n_i n_l)) sum ((x_ij - m_i)^T W (x_lm - m_l))^2.

    This is tr(W S_i W S_l) for the 1/n-divisor covariance plug-ins. It
    underestimates the raw unbiased U-statistic by exactly
    1/cross_trace_correction(n_i, n_l); apply that factor to recover it.
    """
    if g_i.centered.shape[1] != g_l.centered.shape[1]:
        raise ValueError("group summaries have mismatched dimensions")
    gram = g_i.centered @ w.apply_rows(g_l.centered).T
    return float(np.sum(gram * gram)) / (g_i.n * g_l.n)


def cross_trace_correction(n_i: int, n_l: int) -> float:
    """Exact factor mapping the centered 1/n-divisor form to the raw one."""
    if n_i < 2 or n_l < 2:
        raise ValueError("cross-trace correction requires n_i, n_l >= 2")
    return (n_i * n_l) / ((n_i - 1) * (n_l - 1))


def cross_trace_raw(data_i, data_l, w: WeightSpec) -> float:
    """Literal four-sum U-statistic estimator of tr(W S_i W S_l) (oracle).

    The final sum pairs cross products over distinct indices in both
    groups, sum_{j1 != j3} sum_{j2 != j4} x_ij1^T W x_lj2 * x_ij3^T W x_lj4,
    which makes the estimator translation invariant and exactly unbiased
    for any group means. O(n_i^2 n_l^2), size-guarded.
    """
    data_i = np.asarray(data_i, dtype=np.float64)
    data_l = np.asarray(data_l, dtype=np.float64)
    ni, nl = data_i.shape[0], data_l.shape[0]
    if ni < 2 or nl < 2:
        raise ValueError("raw cross-trace estimation requires n_i, n_l >= 2")
    if ni * nl > _RAW_CROSS_LIMIT:
        raise ValueError(
            f"raw cross-trace estimator limited to n_i * n_l <= {_RAW_CROSS_LIMIT}"
        )
    if data_i.shape[1] != data_l.shape[1]:
        raise ValueError("data blocks have mismatched dimensions")
    prod = data_i @ w.apply_rows(data_l).T  # prod[j, m] = x_ij^T W x_lm
    t1 = float(np.sum(prod * prod))
    t2 = sum(
        prod[j1, j2] * prod[j3, j2]
        for j1, j3 in itertools.permutations(range(ni), 2)
        for j2 in range(nl)
    )
    t3 = sum(
        prod[j1, j2] * prod[j1, j4]
        for j2, j4 in itertools.permutations(range(nl), 2)
        for j1 in range(ni)
    )
    t4 = sum(
        prod[j1, j2] * prod[j3, j4]
        for j1, j3 in itertools.permutations(range(ni), 2)
        for j2, j4 in itertools.permutations(range(nl), 2)
    )
    return (
        t1 / (ni * nl)
        - t2 / (ni * nl * (ni - 1))
        - t3 / (ni * nl * (nl - 1))
        + t4 / (ni * nl * (ni - 1) * (nl - 1))
    )


def _sigma_hat_from_summaries(
    summaries: list[GroupSummary], w: WeightSpec
) -> VarianceEstimate:
    k = len(summaries)
    within = np.empty(k)
    for i, s in enumerate(summaries):
        within[i] = within_trace_simplified(s, w, s.n)
    cross: dict[tuple[int, int], float] = {}
    for i in range(k):
        for l in range(i + 1, k):
            raw_equiv = cross_trace_simplified(
                summaries[i], summaries[l], w
            ) * cross_trace_correction(summaries[i].n, summaries[l].n)
            cross[(i, l)] = raw_equiv
    total = 0.0
    for i, s in enumerate(summaries):
        total += 2.0 * (k - 1) ** 2 / (s.n * (s.n - 1)) * within[i]
    for (i, l), value in cross.items():
        total += 4.0 / (summaries[i].n * summaries[l].n) * value
    if not total > 0.0:
        raise DegenerateVariance(
            f"variance estimate {total} is not positive; the trace "
            f"estimators are not sign-constrained in small samples"
        )
    return VarianceEstimate(
        sigma_hat_sq=total, within_traces=within, cross_traces=cross
    )


def sigma_hat_sq(sample: GroupedSample, w: WeightSpec) -> VarianceEstimate:
    """Assemble the variance estimate from the simplified trace estimators."""
    return _sigma_hat_from_summaries(summarize(sample, w), w)


def sigma_sq_plugin(covs, counts, w: WeightSpec) -> float:
    """Known-covariance variance (dense traces, validation path).

    sum_i 2(k-1)^2/(n_i(n_i-1)) tr(W S_i)^2
    + sum_{i<l} 4/(n_i n_l) tr(W S_i W S_l), guarded at p <= 2000.
    """
    if w.p > _DENSE_P_LIMIT:
        raise ValueError(f"dense plug-in variance limited to p <= {_DENSE_P_LIMIT}")
    covs = [np.asarray(c, dtype=np.float64) for c in covs]
    counts = [int(n) for n in counts]
    k = len(covs)
    if len(counts) != k:
        raise ValueError("covs and counts must have equal length")
    for c in covs:
        if c.shape != (w.p, w.p):
            raise ValueError(f"covariance shape {c.shape} does not match p={w.p}")
    if any(n < 2 for n in counts):
        raise ValueError("every group count must be at least 2")
    w_dense = w.materialize()
    wc = [w_dense @ c for c in covs]
    total = 0.0
    for i in range(k):
        n = counts[i]
        total += 2.0 * (k - 1) ** 2 / (n * (n - 1)) * float(np.sum(wc[i] * wc[i].T))
    for i in range(k):
        for l in range(i + 1, k):
            total += 4.0 / (counts[i] * counts[l]) * float(np.sum(wc[i] * wc[l].T))
    return total
