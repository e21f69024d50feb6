import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hybridprec.harness as harness
from hybridprec.cli import main as cli_main
from hybridprec.errors import ConfigurationError
from hybridprec.harness import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    mix_seed,
    parse_config,
    run_sweep,
    write_results,
)


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


SMALL_CFG = """
# small deterministic experiment
system.n_tx = 16
system.n_rx = 4
system.n_users = 2
system.n_streams = 1
system.n_rf_tx = 2
system.n_carriers = 2
system.f_c = 28e9
system.bandwidth = 1e9
channel.mode = clustered
channel.n_clusters = 4
channel.n_rays = 3
admm.max_iters = 15
architectures = fc-ups, fc-dps
snr_grid_db = 0, 10
n_trials = 4
master_seed = 4242
baselines.fully_digital = true
baselines.admm_mu0 = true
"""


class TestSeedMixing:
    def test_distinct_over_contiguous_range(self):
        seeds = {mix_seed(123, t) for t in range(10000)}
        assert len(seeds) == 10000

    @settings(deadline=None, max_examples=100)
    @given(
        master=st.integers(0, 2**64 - 1),
        t1=st.integers(0, 2**64 - 1),
        t2=st.integers(0, 2**64 - 1),
    )
    def test_injective_in_trial(self, master, t1, t2):
        if t1 != t2:
            assert mix_seed(master, t1) != mix_seed(master, t2)

    def test_within_64_bits(self):
        for t in range(100):
            assert 0 <= mix_seed(2**64 - 1, t) < 2**64


class TestParseConfig:
    def test_accepts_full_rf_budget(self, tmp_path):
        cfg = parse_config(
            write_cfg(
                tmp_path,
                SMALL_CFG.replace("system.n_rf_tx = 2", "system.n_rf_tx = 8")
                .replace("system.n_users = 2", "system.n_users = 4")
                .replace("system.n_streams = 1", "system.n_streams = 2")
                .replace("system.n_tx = 16", "system.n_tx = 256"),
            )
        )
        assert cfg.system.n_rf_tx == 8

    def test_rejects_stream_overload(self, tmp_path):
        bad = SMALL_CFG.replace("system.n_rf_tx = 2", "system.n_rf_tx = 3").replace(
            "system.n_streams = 1", "system.n_streams = 2"
        )
        with pytest.raises(ConfigurationError, match=r"n_users\*n_streams"):
            parse_config(write_cfg(tmp_path, bad))

    def test_rejects_non_square_array(self, tmp_path):
        bad = SMALL_CFG.replace("system.n_tx = 16", "system.n_tx = 10")
        with pytest.raises(ConfigurationError, match="perfect square"):
            parse_config(write_cfg(tmp_path, bad))

    def test_unknown_key_named(self, tmp_path):
        with pytest.raises(ConfigurationError, match="system.n_tyx"):
            parse_config(write_cfg(tmp_path, SMALL_CFG + "\nsystem.n_tyx = 2\n"))

    def test_missing_key_named(self, tmp_path):
        bad = SMALL_CFG.replace("master_seed = 4242", "")
        with pytest.raises(ConfigurationError, match="master_seed"):
            parse_config(write_cfg(tmp_path, bad))

    def test_bad_bool_named(self, tmp_path):
        bad = SMALL_CFG.replace(
            "baselines.fully_digital = true", "baselines.fully_digital = maybe"
        )
        with pytest.raises(ConfigurationError, match="fully_digital"):
            parse_config(write_cfg(tmp_path, bad))

    def test_architecture_validated_against_dims(self, tmp_path):
        bad = SMALL_CFG.replace("fc-ups, fc-dps", "aosa-ups-l1-sa5")
        with pytest.raises(ConfigurationError, match="n_subarrays"):
            parse_config(write_cfg(tmp_path, bad))


class TestRunSweep:
    def test_single_trial_degenerate_statistics(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG.replace("n_trials = 4", "n_trials = 1")))
        rows, manifest = run_sweep(cfg)
        assert all(r.trials == 1 and r.std_se == 0.0 and r.ci95 == 0.0 for r in rows)
        assert manifest["n_excluded"] == 0

    def test_row_plan_covers_baselines_and_variants(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG))
        rows, _ = run_sweep(cfg)
        labels = {r.arch for r in rows}
        assert labels == {"fully-digital", "fc-ups", "fc-ups+mu0", "fc-dps", "fc-dps+mu0"}
        assert len(rows) == 5 * 2  # five variants, two SNR points

    def test_digital_baseline_dominates_and_is_clean(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG))
        rows, _ = run_sweep(cfg)
        by = {(r.arch, r.snr_db): r for r in rows}
        for snr in (0.0, 10.0):
            fd = by[("fully-digital", snr)]
            assert fd.residual == 0.0
            assert fd.mean_se >= by[("fc-ups", snr)].mean_se

    def test_failed_trial_excluded_and_counted(self, tmp_path, monkeypatch):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG))
        real = harness.design_hybrid
        boom_seed = mix_seed(cfg.master_seed, 2)

        def flaky(f_opt, channels, system, arch, prm, rng):
            if rng.bit_generator.seed_seq.entropy[0] == boom_seed:
                raise np.linalg.LinAlgError("synthetic failure")
            return real(f_opt, channels, system, arch, prm, rng)

        monkeypatch.setattr(harness, "design_hybrid", flaky)
        rows, manifest = run_sweep(cfg)
        assert manifest["n_excluded"] == 1
        assert manifest["excluded_trials"][0]["trial"] == 2
        assert all(r.trials == 3 for r in rows)

    def test_all_failures_is_an_error(self, tmp_path, monkeypatch):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG))

        def boom(*a, **k):
            raise np.linalg.LinAlgError("nope")

        monkeypatch.setattr(harness, "design_hybrid", boom)
        with pytest.raises(RuntimeError, match="all 4 trials failed"):
            run_sweep(cfg)


class TestWriteResults:
    def _rows(self):
        return [
            ResultRow("fc-ups", 0, "ups", 10.0, 7, 12.3456789012345, 0.5, 0.37, 0.01, 1e-9, 223.2376),
        ]

    def test_round_trip_12_digits(self, tmp_path):
        csv_path, _ = write_results(self._rows(), {"master_seed": 1}, tmp_path / "r.csv")
        header, line = csv_path.read_text().strip().split("\n")
        assert header == CSV_HEADER
        vals = line.split(",")
        # 12 significant digits: half an ulp in the 12th digit of a ~1e1 value
        assert float(vals[5]) == pytest.approx(12.3456789012345, abs=5e-11)
        assert vals[0] == "fc-ups"

    def test_manifest_contains_seed_verbatim(self, tmp_path):
        _, manifest_path = write_results(self._rows(), {"master_seed": 987654321}, tmp_path / "r.csv")
        assert json.loads(manifest_path.read_text())["master_seed"] == 987654321

    def test_empty_rows_refused(self, tmp_path):
        with pytest.raises(ConfigurationError, match="empty"):
            write_results([], {}, tmp_path / "r.csv")


class TestDeterminism:
    def test_serial_and_parallel_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, SMALL_CFG + "\noutput_path = out.csv\n")
        cfg1 = parse_config(path)
        cfg1.output_path = str(tmp_path / "serial.csv")
        cfg1.threads = 1
        rows1, m1 = run_sweep(cfg1)
        write_results(rows1, m1, cfg1.output_path)

        cfg2 = parse_config(path)
        cfg2.output_path = str(tmp_path / "parallel.csv")
        cfg2.threads = 4
        rows2, m2 = run_sweep(cfg2)
        write_results(rows2, m2, cfg2.output_path)

        a = (tmp_path / "serial.csv").read_bytes()
        b = (tmp_path / "parallel.csv").read_bytes()
        assert a == b

    def test_same_seed_same_rows(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, SMALL_CFG))
        rows1, _ = run_sweep(cfg)
        rows2, _ = run_sweep(cfg)
        assert rows1 == rows2


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        path = write_cfg(tmp_path, SMALL_CFG)
        assert cli_main(["validate", "--config", str(path)]) == 0
        assert "ok:" in capsys.readouterr().out

    def test_validate_rejects_bad_config(self, tmp_path, capsys):
        path = write_cfg(tmp_path, SMALL_CFG.replace("system.n_tx = 16", "system.n_tx = 10"))
        assert cli_main(["validate", "--config", str(path)]) == 2
        assert "perfect square" in capsys.readouterr().err

    def test_power_subcommand(self, capsys):
        assert cli_main(["power", "--arch", "fc-ups", "--n-tx", "256", "--n-rf", "8"]) == 0
        out = capsys.readouterr().out
        val = float(out.split("power_w=")[1].strip())
        assert abs(val - 223.24) <= 0.01

    def test_run_writes_csv_and_manifest(self, tmp_path, capsys):
        path = write_cfg(tmp_path, SMALL_CFG)
        out = tmp_path / "res.csv"
        rc = cli_main(
            ["run", "--config", str(path), "--trials", "2", "--out", str(out), "--seed", "7"]
        )
        assert rc == 0
        assert out.exists()
        manifest = json.loads((tmp_path / "res.csv.manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert manifest["config"]["n_trials"] == 2
        body = out.read_text().splitlines()
        assert body[0] == CSV_HEADER
        assert len(body) == 1 + 5 * 2

    def test_missing_config_is_clean_error(self, tmp_path, capsys):
        rc = cli_main(["run", "--config", str(tmp_path / "nope.cfg")])
        assert rc == 1
