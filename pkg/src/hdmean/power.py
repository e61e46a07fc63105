"""Analytic power, relative efficiency, and assumption diagnostics.

All functions here are deterministic calculators over known parameters.
The power formula substitutes the plug-in variance for the estimated one
(justified by the estimator's ratio consistency); dense-trace paths are
guarded and intended for analysis, not production data sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .statistic import expected_tn
from .testing import normal_upper_quantile
from .variance import sigma_sq_plugin
from .weights import WeightSpec

_DENSE_P_LIMIT = 2000


@dataclass(frozen=True)
class PowerInput:
    """Bundle of known parameters for the analytic power calculators."""

    means: list
    covs: list
    counts: tuple[int, ...]
    w: WeightSpec
    level: float

    def __post_init__(self) -> None:
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie strictly between 0 and 1")
        if len(self.means) != len(self.covs) or len(self.means) != len(self.counts):
            raise ValueError("means, covs and counts must have equal length")
        if any(int(n) < 2 for n in self.counts):
            raise ValueError("every group count must be at least 2")


def asymptotic_power(inp: PowerInput) -> float:
    """Phi(-z_theta + signal / sigma) with the plug-in sigma."""
    signal = expected_tn(inp.means, inp.w)
    sigma = math.sqrt(sigma_sq_plugin(inp.covs, inp.counts, inp.w))
    z_theta = normal_upper_quantile(inp.level)
    return float(ndtr(-z_theta + signal / sigma))


def equal_cov_power(shared_cov, means, counts, w: WeightSpec, level: float) -> float:
    """Power under a single shared covariance.

    The denominator factors as sqrt(2 tr(W Sigma)^2) times
    sqrt(sum_i (k-1)^2/(n_i(n_i-1)) + sum_{i != l} 1/(n_i n_l)).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    shared_cov = np.asarray(shared_cov, dtype=np.float64)
    if w.p > _DENSE_P_LIMIT:
        raise ValueError(f"dense power path limited to p <= {_DENSE_P_LIMIT}")
    if shared_cov.shape != (w.p, w.p):
        raise ValueError(f"covariance shape {shared_cov.shape} does not match p={w.p}")
    counts = [int(n) for n in counts]
    k = len(counts)
    if len(means) != k:
        raise ValueError("means and counts must have equal length")
    if any(n < 2 for n in counts):
        raise ValueError("every group count must be at least 2")
    signal = expected_tn(means, w)
    wc = w.materialize() @ shared_cov
    tr_wc_sq = float(np.sum(wc * wc.T))
    count_term = sum((k - 1) ** 2 / (n * (n - 1)) for n in counts)
    count_term += sum(
        1.0 / (counts[i] * counts[l])
        for i in range(k)
        for l in range(k)
        if i != l
    )
    denom = math.sqrt(2.0 * tr_wc_sq) * math.sqrt(count_term)
    return float(ndtr(-normal_upper_quantile(level) + signal / denom))


def are_vs_hb(means, shared_cov, w: WeightSpec) -> float:
    """Asymptotic relative efficiency against the unweighted (W = I) test.

    [sum (mu_i - mu_l)^T W (mu_i - mu_l) * sqrt(tr Sigma^2)]
    / [sum ||mu_i - mu_l||^2 * sqrt(tr (W Sigma)^2)].
    """
    shared_cov = np.asarray(shared_cov, dtype=np.float64)
    if w.p > _DENSE_P_LIMIT:
        raise ValueError(f"dense ARE path limited to p <= {_DENSE_P_LIMIT}")
    if shared_cov.shape != (w.p, w.p):
        raise ValueError(f"covariance shape {shared_cov.shape} does not match p={w.p}")
    vecs = [np.asarray(m, dtype=np.float64) for m in means]
    unweighted = 0.0
    for i in range(len(vecs)):
        for l in range(i + 1, len(vecs)):
            d = vecs[i] - vecs[l]
            unweighted += float(d @ d)
    if unweighted == 0.0:
        raise ValueError("ARE is undefined when all means are equal")
    weighted = expected_tn(vecs, w)
    tr_cov_sq = float(np.sum(shared_cov * shared_cov.T))
    wc = w.materialize() @ shared_cov
    tr_wc_sq = float(np.sum(wc * wc.T))
    return weighted * math.sqrt(tr_cov_sq) / (unweighted * math.sqrt(tr_wc_sq))


def assumption_c_diagnostic(covs, w: WeightSpec) -> float:
    """Largest fourth-order trace ratio underpinning the normal limit.

    Returns max over index tuples (i1, i2, i3, i4) of
    tr(W S_i1 W S_i2 W S_i3 W S_i4) / tr^2[(sum_i W S_i)^2]. Small values
    indicate the normal approximation's moment condition is plausible at
    this configuration; values of order one flag spiked spectra.
    """
    covs = [np.asarray(c, dtype=np.float64) for c in covs]
    if w.p > _DENSE_P_LIMIT:
        raise ValueError(f"dense diagnostic limited to p <= {_DENSE_P_LIMIT}")
    for c in covs:
        if c.shape != (w.p, w.p):
            raise ValueError(f"covariance shape {c.shape} does not match p={w.p}")
    w_dense = w.materialize()
    wc = [w_dense @ c for c in covs]
    total = np.sum(wc, axis=0)
    denom = float(np.sum(total * total.T)) ** 2  # tr((sum_i W S_i)^2), squared
    k = len(wc)
    pair_products = {
        (a, b): wc[a] @ wc[b] for a in range(k) for b in range(k)
    }
    best = -math.inf
    for a in range(k):
        for b in range(k):
            for c in range(k):
                for d in range(k):
                    val = float(np.sum(pair_products[(a, b)] * pair_products[(c, d)].T))
                    if val > best:
                        best = val
    return best / denom


def sparse_alternative_snr(
    nu: float,
    delta: float,
    p: int,
    counts,
    w: WeightSpec,
    lambda_p_star: float,
) -> float:
    """Lower bound on the standardized signal for a sparse shift.

    One pair of groups differs by nu in the first floor(p^delta)
    coordinates. For constant-alpha weights with diagonal entries sorted
    ascending, the standardized signal is bounded below by

        [alpha^2 p^(2 delta) nu^2 + nu^2 sum_{i<=p^delta} omega_i^2]
        / [lambda_p_star sqrt(2 (sum_{i=2}^{p-1} omega_i^4 + 2 omega_p^4
           + 2 p omega_p^2 alpha^2 + p^2 alpha^4)) sqrt(count term)]

    where the count term is sum_i (k-1)^2/(n_i(n_i-1)) + sum_{i != l}
    1/(n_i n_l) and lambda_p_star is the largest covariance eigenvalue.
    The bound exceeding any fixed quantile demonstrates power approaching
    one when delta > 1/2.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    if p < 2 or w.p != p:
        raise ValueError("p must be >= 2 and match the weight dimension")
    if lambda_p_star <= 0.0:
        raise ValueError("lambda_p_star must be positive")
    alpha = w.alpha
    if float(np.max(alpha) - np.min(alpha)) > 1e-12 * (1.0 + abs(float(alpha[0]))):
        raise ValueError("this bound requires a constant alpha vector")
    a = float(alpha[0])
    omega_sq = np.sort(w.omega_sq)
    signals = int(math.floor(p ** delta + 1e-9))
    numer = a * a * p ** (2.0 * delta) * nu * nu + nu * nu * float(
        omega_sq[:signals].sum()
    )
    omega_4 = omega_sq ** 2
    inner = (
        float(omega_4[1 : p - 1].sum())
        + 2.0 * float(omega_4[-1])
        + 2.0 * p * float(omega_sq[-1]) * a * a
        + p * p * a ** 4
    )
    counts = [int(n) for n in counts]
    k = len(counts)
    if any(n < 2 for n in counts):
        raise ValueError("every group count must be at least 2")
    count_term = sum((k - 1) ** 2 / (n * (n - 1)) for n in counts)
    count_term += sum(
        1.0 / (counts[i] * counts[l])
        for i in range(k)
        for l in range(k)
        if i != l
    )
    denom = lambda_p_star * math.sqrt(2.0 * inner) * math.sqrt(count_term)
    return numer / denom
