import json

import numpy as np
import pytest

from hdmean import (
    InnovationLaw,
    ScenarioKind,
    SimConfig,
    config_from_json,
    emit_csv,
    group_sizes,
    read_csv_report,
    run_grid,
    table_preset,
)
from hdmean.harness import PRESET_NAMES, SimReport


def tiny_config(**overrides):
    base = dict(
        dims=(16,),
        n_stars=(10,),
        laws=(InnovationLaw.NORMAL,),
        scenarios=(ScenarioKind.SCENARIO2,),
        rhos=(0.1,),
        rs=(0.0,),
        replications=40,
        level=0.05,
        master_seed=99,
        tests=("tw", "thb"),
    )
    base.update(overrides)
    return SimConfig(**base)


class TestGroupSizes:
    def test_standard_values(self):
        assert group_sizes(60) == (48, 60, 72)
        assert group_sizes(100) == (80, 100, 120)

    def test_rejects_non_integral_scaling(self):
        with pytest.raises(ValueError, match="integer"):
            group_sizes(61)

    def test_rejects_too_small(self):
        with pytest.raises(ValueError, match="positive"):
            group_sizes(0)


class TestSimConfig:
    def test_cell_expansion_is_full_product(self):
        cfg = tiny_config(dims=(8, 16), rs=(0.0, 0.04))
        assert len(cfg.cells()) == 4

    def test_validation_errors(self):
        with pytest.raises(ValueError, match="replications"):
            tiny_config(replications=0)
        with pytest.raises(ValueError, match="tests"):
            tiny_config(tests=("tw", "bogus"))
        with pytest.raises(ValueError, match="rho"):
            tiny_config(rhos=(1.5,))
        with pytest.raises(ValueError, match="level"):
            tiny_config(level=1.0)


class TestPresets:
    def test_size_preset_shape(self):
        cfg = table_preset("size-s1", replications=10)
        assert len(cfg.cells()) == 18  # 6 (p, n*) pairs x 3 laws
        assert cfg.rs == (0.0,)
        assert cfg.dims == (200, 500, 800)
        assert cfg.n_stars == (60, 100)

    def test_power_preset_shape(self):
        cfg = table_preset("power-s1-normal", replications=10)
        assert len(cfg.cells()) == 96  # 2 n* x 3 p x 4 rho x 4 r
        assert cfg.laws == (InnovationLaw.NORMAL,)
        assert cfg.scenarios == (ScenarioKind.SCENARIO1,)

    def test_every_preset_is_constructible(self):
        for name in PRESET_NAMES:
            table_preset(name, replications=5)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            table_preset("nope")


class TestRunGrid:
    def test_single_replication_rate_is_zero_or_one(self):
        report = run_grid(tiny_config(replications=1))
        for row in report.rows:
            assert row.rejection_rate in (0.0, 1.0)

    def test_rate_times_replications_is_integer_count(self):
        report = run_grid(tiny_config())
        for row in report.rows:
            assert row.rejections == round(row.rejection_rate * row.replications)
            assert 0.0 <= row.rejection_rate <= 1.0

    def test_reruns_are_identical(self):
        cfg = tiny_config()
        a = run_grid(cfg)
        b = run_grid(cfg)
        assert [(r.rejections, r.degenerate) for r in a.rows] == [
            (r.rejections, r.degenerate) for r in b.rows
        ]

    def test_worker_count_does_not_change_counts(self):
        cfg = tiny_config(replications=600)  # spans multiple chunks
        serial = run_grid(cfg, threads=1)
        parallel = run_grid(cfg, threads=2)
        assert [(r.test, r.rejections, r.degenerate) for r in serial.rows] == [
            (r.test, r.rejections, r.degenerate) for r in parallel.rows
        ]

    def test_null_cell_rate_is_near_level(self):
        cfg = tiny_config(dims=(30,), n_stars=(20,), replications=400, master_seed=5)
        report = run_grid(cfg, threads=2)
        for row in report.rows:
            assert 0.01 <= row.rejection_rate <= 0.12

    def test_power_cell_beats_null_cell(self):
        null_cfg = tiny_config(dims=(50,), n_stars=(20,), replications=200)
        alt_cfg = tiny_config(
            dims=(50,), n_stars=(20,), rs=(0.3,), rhos=(0.1,), replications=200
        )
        null_rate = run_grid(null_cfg).rows[0].rejection_rate
        alt_rate = run_grid(alt_cfg).rows[0].rejection_rate
        assert alt_rate > null_rate + 0.2


class TestEmitCsv:
    def test_empty_report_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv(SimReport(rows=(), master_seed=1), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("p,n_star,law,scenario")

    def test_single_cell_two_tests(self, tmp_path):
        path = tmp_path / "one.csv"
        emit_csv(run_grid(tiny_config(replications=3)), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3  # header + tw + thb

    def test_round_trip_recovers_counts(self, tmp_path):
        path = tmp_path / "rt.csv"
        report = run_grid(tiny_config(replications=37))
        emit_csv(report, path)
        parsed = read_csv_report(path)
        assert len(parsed) == len(report.rows)
        for row, rec in zip(report.rows, parsed):
            assert rec["rejections"] == row.rejections
            assert rec["replications"] == row.replications
            assert rec["rejection_rate"] == row.rejection_rate
            assert rec["test"] == row.test
            assert rec["master_seed"] == report.master_seed


class TestConfigFromJson:
    def _write(self, tmp_path, payload):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(payload))
        return path

    def test_round_trip(self, tmp_path):
        payload = {
            "dims": [16],
            "n_stars": [10],
            "laws": ["normal", "t4"],
            "scenarios": ["scenario2"],
            "rhos": [0.1],
            "rs": [0.0, 0.02],
            "replications": 5,
            "level": 0.05,
            "master_seed": 7,
            "tests": ["tw"],
        }
        cfg = config_from_json(self._write(tmp_path, payload))
        assert cfg.laws == (InnovationLaw.NORMAL, InnovationLaw.T4)
        assert len(cfg.cells()) == 4

    def test_unknown_keys_rejected(self, tmp_path):
        payload = {
            "dims": [16],
            "n_stars": [10],
            "laws": ["normal"],
            "scenarios": ["scenario2"],
            "rhos": [0.1],
            "rs": [0.0],
            "replications": 5,
            "bogus": 1,
        }
        with pytest.raises(ValueError, match="unknown config keys"):
            config_from_json(self._write(tmp_path, payload))

    def test_missing_keys_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="missing config keys"):
            config_from_json(self._write(tmp_path, {"dims": [16]}))


def test_grid_seed_changes_results():
    a = run_grid(tiny_config(master_seed=1, replications=100))
    b = run_grid(tiny_config(master_seed=2, replications=100))
    assert any(
        ra.rejections != rb.rejections for ra, rb in zip(a.rows, b.rows)
    )
