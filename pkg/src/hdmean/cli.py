"""Command-line front end.

Subcommands: ``test`` (run the test on CSV data), ``simulate`` (run a
preset or a JSON-configured grid), ``power`` (analytic power and
efficiency calculators), ``oracle-check`` (fast-vs-literal equivalence
sweep on random tiny instances).

Exit codes: 0 success, 1 malformed input, 2 validation failure,
3 degenerate variance (test subcommand), 4 oracle-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .datagen import ScenarioKind, build_scenario
from .harness import PRESET_NAMES, config_from_json, emit_csv, run_grid, table_preset
from .power import (
    PowerInput,
    are_vs_hb,
    assumption_c_diagnostic,
    asymptotic_power,
    equal_cov_power,
    sparse_alternative_snr,
)
from .sample import GroupedSample, summarize
from .statistic import compute_tn, compute_tn_naive
from .testing import run_test
from .variance import (
    cross_trace_correction,
    cross_trace_raw,
    cross_trace_simplified,
    within_trace_raw,
    within_trace_simplified,
)
from .weights import WeightSpec, default_weights, identity_weights

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_ORACLE = 4


class ParseFailure(Exception):
    """Malformed input file (exit code 1)."""


def _load_data_csv(path: str) -> GroupedSample:
    """CSV with one observation per row: integer group label (1-based,
    contiguous), then p finite float columns."""
    try:
        with open(path, newline="") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise ParseFailure(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseFailure(f"{path} is empty")
    labels = []
    values = []
    for lineno, row in enumerate(rows, start=1):
        try:
            labels.append(int(row[0]))
            values.append([float(v) for v in row[1:]])
        except (ValueError, IndexError) as exc:
            raise ParseFailure(f"{path}:{lineno}: malformed row: {exc}") from exc
        if len(values[-1]) != len(values[0]):
            raise ParseFailure(f"{path}:{lineno}: inconsistent column count")
        if not all(math.isfinite(v) for v in values[-1]):
            raise ParseFailure(f"{path}:{lineno}: non-finite value")
    k = max(labels)
    if sorted(set(labels)) != list(range(1, k + 1)):
        raise ValueError("group labels must be contiguous integers starting at 1")
    groups = []
    arr = np.asarray(values, dtype=np.float64)
    lab = np.asarray(labels)
    for i in range(1, k + 1):
        groups.append(arr[lab == i])
    return GroupedSample(groups=tuple(groups))


def _load_weights_csv(path: str, p: int) -> WeightSpec:
    """Two-column CSV of (omega_sq, alpha), one row per coordinate."""
    try:
        with open(path, newline="") as handle:
            rows = [row for row in csv.reader(handle) if row]
        pairs = [(float(r[0]), float(r[1])) for r in rows]
    except (OSError, ValueError, IndexError) as exc:
        raise ParseFailure(f"cannot parse weight file {path}: {exc}") from exc
    omega_sq = np.array([a for a, _ in pairs])
    alpha = np.array([b for _, b in pairs])
    if omega_sq.shape[0] != p:
        raise ValueError(
            f"weight file has {omega_sq.shape[0]} rows, data dimension is {p}"
        )
    return WeightSpec(omega_sq=omega_sq, alpha=alpha)


def _select_weights(choice: str, weights_file, p: int) -> WeightSpec:
    if choice == "default":
        return default_weights(p)
    if choice == "identity":
        return identity_weights(p)
    if weights_file is None:
        raise ValueError("--weights file requires --weights-file")
    return _load_weights_csv(weights_file, p)


def _json_value(x: float):
    return None if isinstance(x, float) and math.isnan(x) else x


def cmd_test(args) -> int:
    sample = _load_data_csv(args.data)
    w = _select_weights(args.weights, args.weights_file, sample.p)
    outcome = run_test(sample, w, args.level)
    payload = {
        "t_n": outcome.t_n,
        "sigma_hat": _json_value(outcome.sigma_hat),
        "z_score": _json_value(outcome.z_score),
        "p_value": _json_value(outcome.p_value),
        "reject": outcome.reject,
        "level": outcome.level,
        "degenerate": outcome.degenerate,
        "k": sample.k,
        "p": sample.p,
        "n_i": list(sample.counts),
    }
    print(json.dumps(payload, sort_keys=True))
    return EXIT_DEGENERATE if outcome.degenerate else EXIT_OK


def cmd_simulate(args) -> int:
    if args.preset is not None:
        cfg = table_preset(args.preset)
    else:
        cfg = config_from_json(args.config)
    overrides = {}
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.level is not None:
        overrides["level"] = args.level
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("HDMEAN_THREADS", "1"))
    report = run_grid(cfg, threads=threads)
    emit_csv(report, args.out)
    for row in report.rows:
        print(
            f"p={row.p} n*={row.n_star} law={row.law} scenario={row.scenario} "
            f"rho={row.rho} r={row.r} {row.test}: rate={row.rejection_rate:.4f} "
            f"({row.rejections}/{row.replications}, degenerate={row.degenerate})"
        )
    return EXIT_OK


def _power_means(template: dict, p: int, k: int) -> list[np.ndarray]:
    kind = template.get("kind")
    if kind == "null":
        return [np.zeros(p) for _ in range(k)]
    if kind == "dense":
        tau = float(template["tau"])
        count = int(template.get("signals", p))
        if not 0 <= count <= p:
            raise ValueError("signal count must lie in [0, p]")
        mu1 = np.zeros(p)
        mu1[:count] = tau
        return [mu1] + [np.zeros(p) for _ in range(k - 1)]
    if kind == "explicit":
        means = [np.asarray(m, dtype=np.float64) for m in template["values"]]
        if len(means) != k:
            raise ValueError(f"expected {k} mean vectors, got {len(means)}")
        return means
    raise ValueError(f"unknown means kind {kind!r}")


def cmd_power(args) -> int:
    try:
        with open(args.params) as handle:
            params = json.load(handle)
    except OSError as exc:
        raise ParseFailure(f"cannot read {args.params}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"malformed JSON in {args.params}: {exc}") from exc
    p = int(params["p"])
    if p > 2000:
        raise ValueError("power calculators refuse p > 2000 (dense paths)")
    counts = tuple(int(n) for n in params["counts"])
    level = float(params.get("level", 0.05))
    w = (
        identity_weights(p)
        if params.get("weights", "default") == "identity"
        else default_weights(p)
    )
    scenario = build_scenario(ScenarioKind(params["covariance"]), p)
    if scenario.k != len(counts):
        raise ValueError("counts length must match the scenario's group count")
    covs = list(scenario.covariances)
    result = {}
    sparse = params.get("sparse")
    if sparse is not None:
        nu = float(sparse["nu"])
        delta = float(sparse["delta"])
        count = int(math.floor(p ** delta + 1e-9))
        mu1 = np.zeros(p)
        mu1[:count] = nu
        means = [mu1] + [np.zeros(p) for _ in range(len(counts) - 1)]
        lambda_p_star = float(
            sparse.get(
                "lambda_p_star", np.linalg.eigvalsh(covs[0])[-1]
            )
        )
        result["sparse_snr_lower_bound"] = sparse_alternative_snr(
            nu, delta, p, counts, w, lambda_p_star
        )
    else:
        means = _power_means(params["means"], p, len(counts))
    inp = PowerInput(means=means, covs=covs, counts=counts, w=w, level=level)
    result["asymptotic_power"] = asymptotic_power(inp)
    equal_covs = all(np.array_equal(covs[0], c) for c in covs[1:])
    if equal_covs:
        result["equal_cov_power"] = equal_cov_power(covs[0], means, counts, w, level)
        if any(np.any(m != means[0]) for m in means[1:]):
            result["are_vs_hb"] = are_vs_hb(means, covs[0], w)
    result["assumption_c_diagnostic"] = assumption_c_diagnostic(covs, w)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(args.seed)
    tolerance = 1e-8
    for trial in range(args.trials):
        k = int(rng.integers(2, 5))
        p = int(rng.integers(1, 7))
        counts = [int(rng.integers(4, 11)) for _ in range(k)]
        groups = [rng.standard_normal((n, p)) for n in counts]
        sample = GroupedSample(groups=tuple(groups))
        w = WeightSpec(
            omega_sq=rng.uniform(0.5, 3.0, p), alpha=rng.uniform(-1.0, 1.0, p)
        )
        failures = []
        fast = compute_tn(sample, w).t_n
        naive = compute_tn_naive(sample, w)
        if abs(fast - naive) > tolerance * (1.0 + abs(naive)):
            failures.append(("compute_tn", fast, naive))
        summaries = summarize(sample, w)
        for i, block in enumerate(sample.groups):
            simplified = within_trace_simplified(summaries[i], w, counts[i])
            raw = within_trace_raw(block, w)
            if abs(simplified - raw) > tolerance * (1.0 + abs(raw)):
                failures.append((f"within_trace[{i}]", simplified, raw))
        for i in range(k):
            for l in range(i + 1, k):
                corrected = cross_trace_simplified(
                    summaries[i], summaries[l], w
                ) * cross_trace_correction(counts[i], counts[l])
                raw = cross_trace_raw(sample.groups[i], sample.groups[l], w)
                if abs(corrected - raw) > tolerance * (1.0 + abs(raw)):
                    failures.append((f"cross_trace[{i},{l}]", corrected, raw))
        if failures:
            replay = {
                "seed": args.seed,
                "trial": trial,
                "k": k,
                "p": p,
                "counts": counts,
                "groups": [g.tolist() for g in groups],
                "omega_sq": w.omega_sq.tolist(),
                "alpha": w.alpha.tolist(),
                "failures": [
                    {"check": name, "value": a, "oracle": b} for name, a, b in failures
                ],
            }
            print(json.dumps(replay), file=sys.stderr)
            print(f"oracle check FAILED at trial {trial}")
            return EXIT_ORACLE
    print(f"oracle check passed: {args.trials} trials within {tolerance:.0e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdmean",
        description="Weighted tests for equality of high-dimensional mean vectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the test on a CSV data file")
    p_test.add_argument("--data", required=True, help="CSV: group label, features")
    p_test.add_argument(
        "--weights",
        choices=("default", "identity", "file"),
        default="default",
    )
    p_test.add_argument("--weights-file", help="CSV of (omega_sq, alpha) rows")
    p_test.add_argument("--level", type=float, default=0.05)
    p_test.set_defaults(handler=cmd_test)

    p_sim = sub.add_parser("simulate", help="run a simulation grid")
    source = p_sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="JSON config file")
    source.add_argument("--preset", choices=PRESET_NAMES)
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.add_argument("--reps", type=int, help="override replication count")
    p_sim.add_argument("--seed", type=int, help="override master seed")
    p_sim.add_argument("--level", type=float, help="override significance level")
    p_sim.add_argument(
        "--threads",
        type=int,
        help="worker count (default: HDMEAN_THREADS env var or 1)",
    )
    p_sim.set_defaults(handler=cmd_simulate)

    p_power = sub.add_parser("power", help="analytic power calculators")
    p_power.add_argument("--params", required=True, help="JSON parameter file")
    p_power.set_defaults(handler=cmd_power)

    p_oracle = sub.add_parser(
        "oracle-check", help="fast-vs-literal equivalence sweep"
    )
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--trials", type=int, default=100)
    p_oracle.set_defaults(handler=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
