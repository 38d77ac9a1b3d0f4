import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from qotalloc.cli import main
from qotalloc.config import (ConfigError, load_config, scenario_from_config,
                             scenario_hash, validate_config)

from conftest import DEMO_CONFIG, REPO_ROOT

GOLDEN_SAMPLES = REPO_ROOT / "tests" / "golden" / "samples.csv"


def small_config(tmp_path, **overrides):
    """Fast config: K=2, N=6, inline channel, two seeds."""
    doc = {
        "scenario": {
            "num_slots": 6,
            "slot_duration_s": 0.1,
            "total_bandwidth_hz": 2.0e7,
            "total_power_watts": 2.0,
            "noise_density_dbm_per_hz": -110,
            "cavs": [
                {"modality": "point_cloud", "sample_size_bits": 1.28e7,
                 "power_cap_watts": 1.0,
                 "curve": {"amplitude": 1.0, "exponent": 0.42}},
                {"modality": "image", "sample_size_bits": 5.6e6,
                 "power_cap_watts": 1.0,
                 "curve": {"amplitude": 1.0, "exponent": 0.30}},
            ],
        },
        "channel": {
            "num_bs": 3, "distance_range_m": [5.0, 150.0],
            "pathloss_ref_db": 30.0, "pathloss_exponent": 3.0,
            "fading": "none", "seed": 7, "hold_distance_slots": 1,
        },
        "solver": {},
        "run": {"scheme": "proposed", "seeds": [7, 8], "out_dir": "unused"},
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path, doc


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestRunCommand:
    def test_writes_all_reports(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("result.json", "ao_trace.csv", "allocation_u.csv",
                     "allocation_p.csv", "samples.csv", "convergence.png"):
            assert (out / name).exists(), name
        record = json.loads((out / "result.json").read_text())
        assert record["feasible"] is True
        assert record["scheme"] == "proposed"
        rows = read_csv(out / "samples.csv")
        assert rows[0] == ["cav", "samples", "error"]
        assert len(rows) == 3

    def test_allocation_csv_shape(self, tmp_path):
        cfg, doc = small_config(tmp_path)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg), "--out", str(out)])
        grid = read_csv(out / "allocation_u.csv")
        assert len(grid) == 2
        assert len(grid[0]) == doc["scenario"]["num_slots"]
        col = [float(r[0]) for r in grid]
        assert sum(col) == pytest.approx(2e7, rel=1e-9)

    def test_csv_floats_round_trip(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg), "--out", str(out)])
        record = json.loads((out / "result.json").read_text())
        rows = read_csv(out / "samples.csv")[1:]
        for k, row in enumerate(rows):
            assert float(row[1]) == record["per_cav_samples"][k]
            assert float(row[2]) == record["per_cav_errors"][k]

    def test_deterministic_result_json(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", str(cfg), "--out", str(out_a)])
        main(["run", "--config", str(cfg), "--out", str(out_b)])
        rec_a = json.loads((out_a / "result.json").read_text())
        rec_b = json.loads((out_b / "result.json").read_text())
        rec_a.pop("timing")
        rec_b.pop("timing")
        assert rec_a == rec_b

    def test_scheme_flag(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out),
                     "--scheme", "equal_split"]) == 0
        record = json.loads((out / "result.json").read_text())
        assert record["scheme"] == "equal_split"
        assert record["converged"] is None

    def test_unknown_scheme_exit_2(self, tmp_path, capsys):
        cfg, _ = small_config(tmp_path)
        assert main(["run", "--config", str(cfg), "--out",
                     str(tmp_path / "x"), "--scheme", "magic"]) == 2
        assert "unknown scheme" in capsys.readouterr().err

    def test_schema_violation_exit_2(self, tmp_path, capsys):
        doc = json.loads(Path(DEMO_CONFIG).read_text())
        doc["scenario"]["total_bandwidth_hz"] = -5
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert main(["run", "--config", str(bad)]) == 2
        assert "total_bandwidth_hz" in capsys.readouterr().err

    def test_json_parse_error_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n "scenario": [,]\n}\n')
        assert main(["run", "--config", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_domain_error_exit_3(self, tmp_path, capsys):
        _, doc = small_config(tmp_path)
        doc["scenario"]["gains"] = [[1e-6] * 6]   # one row for two vehicles
        del doc["channel"]
        bad = tmp_path / "mismatch.json"
        bad.write_text(json.dumps(doc))
        assert main(["run", "--config", str(bad), "--out",
                     str(tmp_path / "x")]) == 3
        assert "gains shape" in capsys.readouterr().err


class TestCompareCommand:
    def test_rows_and_columns(self, tmp_path):
        cfg, doc = small_config(tmp_path)
        out = tmp_path / "cmp"
        assert main(["compare", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "compare.csv")
        K = len(doc["scenario"]["cavs"])
        assert len(rows[0]) == 3 + 2 * K + 1
        seeds = doc["run"]["seeds"]
        # one row per seed x scheme plus one mean row per scheme
        assert len(rows) - 1 == (len(seeds) + 1) * 5
        keys = {(r[0], r[1]) for r in rows[1:]}
        assert len(keys) == len(rows) - 1
        assert (out / "samples.png").exists()
        assert (out / "errors.png").exists()

    def test_proposed_mean_dominates(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "cmp"
        main(["compare", "--config", str(cfg), "--out", str(out)])
        rows = read_csv(out / "compare.csv")
        means = {r[1]: float(r[2]) for r in rows[1:] if r[0] == "mean"}
        proposed = means.pop("proposed")
        for value in means.values():
            assert proposed <= value + 1e-9

    def test_thread_env_does_not_change_results(self, tmp_path, monkeypatch):
        cfg, _ = small_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["compare", "--config", str(cfg), "--out", str(out_a)])
        monkeypatch.setenv("QOT_THREADS", "1")
        main(["compare", "--config", str(cfg), "--out", str(out_b)])
        rows_a = [r[:-1] for r in read_csv(out_a / "compare.csv")]  # drop wall time
        rows_b = [r[:-1] for r in read_csv(out_b / "compare.csv")]
        assert rows_a == rows_b


class TestBenchCommand:
    def test_reference_skipped_beyond_size_cap(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "bench"
        assert main(["bench", "--config", str(cfg), "--out", str(out),
                     "--slots", "8,40"]) == 0
        rows = read_csv(out / "bench.csv")
        header = rows[0]
        by_key = {(r[0], r[1]): dict(zip(header, r)) for r in rows[1:]}
        assert by_key[("8", "reference")]["status"] == "ok"
        assert by_key[("40", "reference")]["status"] == "skipped"
        assert by_key[("40", "proposed")]["status"] == "ok"
        assert len(rows) - 1 == 4
        assert (out / "scaling.png").exists()


class TestGenScenario:
    def test_round_trip_hash_stable(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        out = tmp_path / "gen"
        assert main(["gen-scenario", "--config", str(cfg), "--out",
                     str(out)]) == 0
        exported = out / "scenario.json"
        original = scenario_from_config(load_config(str(cfg)))
        document = load_config(str(exported))
        reloaded = scenario_from_config(document)
        assert scenario_hash(original) == scenario_hash(reloaded)
        np.testing.assert_array_equal(original.reduced_gains,
                                      reloaded.reduced_gains)

    def test_seed_override_changes_hash(self, tmp_path):
        cfg, _ = small_config(tmp_path)
        a = scenario_from_config(load_config(str(cfg)), seed=1)
        b = scenario_from_config(load_config(str(cfg)), seed=2)
        assert scenario_hash(a) != scenario_hash(b)


class TestConfigValidation:
    def test_demo_config_valid(self):
        doc = load_config(str(DEMO_CONFIG))
        validate_config(doc)

    def test_noise_keys_are_exclusive(self, tmp_path):
        _, doc = small_config(tmp_path)
        doc["scenario"]["noise_density_w_per_hz"] = 1e-14
        with pytest.raises(ConfigError):
            validate_config(doc)

    def test_dbm_conversion(self):
        doc = load_config(str(DEMO_CONFIG))
        scen = scenario_from_config(doc)
        assert scen.noise_density_w_per_hz == pytest.approx(1e-14, rel=1e-12)

    def test_gains_or_channel_required(self, tmp_path):
        _, doc = small_config(tmp_path)
        del doc["channel"]
        with pytest.raises(ConfigError):
            validate_config(doc)


@pytest.mark.skipif(not GOLDEN_SAMPLES.exists(),
                    reason="golden file not generated yet")
class TestGoldenDemo:
    def test_demo_reproduces_golden_samples(self, tmp_path):
        out = tmp_path / "demo"
        assert main(["run", "--config", str(DEMO_CONFIG), "--out",
                     str(out)]) == 0
        assert (out / "samples.csv").read_bytes() == GOLDEN_SAMPLES.read_bytes()
