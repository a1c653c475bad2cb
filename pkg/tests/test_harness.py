import json

import numpy as np
import pytest

from blindmd.cli import main
from blindmd.harness import (
    ConfigError,
    ResultRow,
    ResultTable,
    config_from_dict,
    emit_results,
    load_config,
    run_ber_sweep,
    run_tap_error,
    table_to_csv,
    table_to_json,
    trial_rng,
)

SMALL = dict(
    kind="ber-sweep",
    n=256,
    n_r=16,
    m=16,
    trials=4,
    snr_db=[1e9],  # effectively noiseless but finite for CSV formatting
    receivers=["blind", "mrc-fft", "mrc-linear", "mmse"],
    blind=dict(iterations=6, derotate_at=3),
    seed=5,
)


class TestConfig:
    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match="pilot_densty"):
            config_from_dict({**SMALL, "pilot_densty": 0.1})

    def test_nested_unknown_key(self):
        bad = dict(SMALL)
        bad["blind"] = {"iterations": 5, "warp": 1}
        with pytest.raises(ConfigError, match="blind.warp"):
            config_from_dict(bad)

    def test_kind_mismatch(self):
        with pytest.raises(ConfigError, match="kind"):
            config_from_dict(dict(SMALL), kind="temporal")

    def test_unresolvable_pdp(self):
        with pytest.raises(ConfigError, match="pdps"):
            config_from_dict({**SMALL, "pdps": ["nope"]})

    def test_unknown_receiver(self):
        with pytest.raises(ConfigError, match="receivers"):
            config_from_dict({**SMALL, "receivers": ["zf"]})

    def test_multiuser_rejects_single_user_receivers(self):
        with pytest.raises(ConfigError, match="single-user"):
            config_from_dict({
                **SMALL, "n_u": 2, "pdps": ["ped4", "ped4-dom1"],
                "receivers": ["blind", "mrc-fft"],
            })

    def test_trials_positive(self):
        with pytest.raises(ConfigError, match="trials"):
            config_from_dict({**SMALL, "trials": 0})

    def test_config_echo_round_trip(self):
        cfg = config_from_dict(dict(SMALL))
        again = config_from_dict(cfg.to_dict())
        assert again == cfg


class TestSeedProtocol:
    def test_streams_reproducible(self):
        a = trial_rng(7, "ber-sweep", 2, 11).standard_normal(8)
        b = trial_rng(7, "ber-sweep", 2, 11).standard_normal(8)
        assert np.array_equal(a, b)

    def test_streams_distinct_across_keys(self):
        base = trial_rng(7, "ber-sweep", 2, 11).standard_normal(8)
        for key in [(8, "ber-sweep", 2, 11), (7, "tap-error", 2, 11),
                    (7, "ber-sweep", 3, 11), (7, "ber-sweep", 2, 12)]:
            assert not np.array_equal(trial_rng(*key).standard_normal(8), base)


class TestResultTable:
    def _table(self):
        t = ResultTable(meta={"config": {}, "seed": 1})
        t.add(experiment="ber-sweep", receiver="blind", snr_db=2.0, metric="ber",
              value=0.012345678987, stderr=0.00012345, trials=10, seed=1)
        return t

    def test_csv_columns_and_digits(self):
        text = table_to_csv(self._table())
        header, row = text.strip().split("\n")
        assert header == "experiment,receiver,snr_db,metric,value,stderr,trials,seed"
        assert row == "ber-sweep,blind,2,ber,0.012345679,0.00012345,10,1"

    def test_empty_table_header_only(self):
        assert table_to_csv(ResultTable()) == (
            "experiment,receiver,snr_db,metric,value,stderr,trials,seed\n"
        )

    def test_json_round_trip(self, tmp_path):
        table = self._table()
        path = emit_results(table, tmp_path / "r.json", "json")
        doc = json.loads(path.read_text())
        row = doc["rows"][0]
        assert row["receiver"] == "blind"
        again = json.dumps({"meta": doc["meta"], "rows": doc["rows"]}, indent=2,
                           allow_nan=True) + "\n"
        assert again == table_to_json(table)

    def test_emit_csv(self, tmp_path):
        path = emit_results(self._table(), tmp_path / "r.csv", "csv")
        assert path.read_text() == table_to_csv(self._table())

    def test_bad_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            emit_results(self._table(), tmp_path / "r.x", "yaml")


class TestRunBerSweep:
    def test_noiseless_all_receivers_zero(self):
        cfg = config_from_dict(dict(SMALL))
        table = run_ber_sweep(cfg)
        assert len(table.rows) == 4
        for row in table.rows:
            assert row.value == 0.0
        assert table.meta["violations"] == []

    def test_byte_identical_reruns(self):
        cfg = config_from_dict({**SMALL, "snr_db": [4.0], "trials": 6})
        a = table_to_csv(run_ber_sweep(cfg))
        b = table_to_csv(run_ber_sweep(cfg, threads=2))
        assert a == b

    def test_seed_changes_results(self):
        cfg_a = config_from_dict({**SMALL, "snr_db": [4.0], "trials": 6})
        cfg_b = config_from_dict({**SMALL, "snr_db": [4.0], "trials": 6, "seed": 6})
        assert table_to_csv(run_ber_sweep(cfg_a)) != table_to_csv(run_ber_sweep(cfg_b))

    def test_stderr_scales_with_trials(self):
        base = {**SMALL, "snr_db": [2.0], "receivers": ["mrc-fft"]}
        t1 = run_ber_sweep(config_from_dict({**base, "trials": 60}))
        t2 = run_ber_sweep(config_from_dict({**base, "trials": 240}))
        ratio = t2.rows[0].stderr / t1.rows[0].stderr
        assert ratio == pytest.approx(0.5, abs=0.1)

    def test_multiuser_sweep_runs(self):
        cfg = config_from_dict(dict(
            kind="ber-sweep", n=256, n_r=16, m=16, n_u=2,
            pdps=["ped4", "ped4-dom1"], trials=3, snr_db=[1e9],
            receivers=["blind", "mmse"],
            blind=dict(iterations=6, derotate_at=3, init="circularity"), seed=2,
        ))
        table = run_ber_sweep(cfg)
        for row in table.rows:
            assert row.value == 0.0


class TestRunTapError:
    def test_single_tap_channel_no_errors(self, tmp_path):
        pdp_path = tmp_path / "single.json"
        pdp_path.write_text(json.dumps([{"delay_samples": 0, "power_linear": 1.0}]))
        cfg = config_from_dict(dict(
            kind="tap-error", n=256, n_r=16, m=16, pdps=[str(pdp_path)],
            trials=10, snr_db=[0.0], receivers=["variance", "circularity"], seed=3,
        ))
        table = run_tap_error(cfg)
        for row in table.rows:
            assert row.value == 0.0

    def test_estimator_columns(self):
        cfg = config_from_dict(dict(
            kind="tap-error", n=256, n_r=16, m=16, trials=8,
            snr_db=[10.0], receivers=["variance", "circularity"], seed=3,
        ))
        table = run_tap_error(cfg)
        names = {row.receiver for row in table.rows}
        assert names == {"variance", "circularity"}


class TestRunTemporal:
    def test_static_channel_warm_start_immediate(self):
        from blindmd.harness import run_temporal

        # zero speed freezes the channel, so the warm start already holds the
        # exact channel and must match the baseline within two iterations
        cfg = config_from_dict(dict(
            kind="temporal", n=256, n_r=16, m=16, trials=30, snr_db=[8.0],
            receivers=["blind", "mrc-fft"], blind=dict(iterations=8),
            speeds_kmh=[0.0], symbol_times_ms=[0.0, 5.0], seed=9,
        ))
        table = run_temporal(cfg)
        assert table.value("blind@0kmh-t5ms", "eta") == 1.0
        assert table.value("blind@0kmh-t5ms", "iterations") <= 2

    def test_rejects_multiuser(self):
        cfg = config_from_dict(dict(
            kind="temporal", n_u=2, pdps=["ped4", "ped4-dom1"],
            receivers=["blind"], trials=2, snr_db=[5.0], seed=1,
            blind=dict(init="circularity"),
        ))
        from blindmd.harness import run_temporal

        with pytest.raises(ValueError, match="single-user"):
            run_temporal(cfg)


class TestCli:
    def _write(self, tmp_path, overrides=None):
        cfg = dict(SMALL)
        if overrides:
            cfg.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_ber_to_csv(self, tmp_path, capsys):
        cfg = self._write(tmp_path)
        out = tmp_path / "out.csv"
        code = main(["ber", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert text.startswith("experiment,receiver,snr_db")
        assert "blind" in text

    def test_stdout_default(self, tmp_path, capsys):
        cfg = self._write(tmp_path)
        assert main(["ber", "--config", str(cfg)]) == 0
        assert "mrc-fft" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**SMALL, "receivers": ["zf"]}))
        assert main(["ber", "--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["ber", "--config", str(tmp_path / "nope.json")]) == 2

    def test_check_violation_exit_3(self, tmp_path, capsys):
        # a deliberately crippled blind decode (de-rotation on the first
        # iteration) loses to the baseline by far more than 3 SE
        cfg = self._write(tmp_path, dict(
            snr_db=[2.0], trials=40,
            receivers=["blind", "mrc-fft"],
            blind=dict(iterations=2, derotate_at=1),
        ))
        code = main(["ber", "--config", str(cfg), "--check"])
        assert code == 3
        assert "check:" in capsys.readouterr().err

    def test_violations_reported_without_check(self, tmp_path, capsys):
        cfg = self._write(tmp_path, dict(
            snr_db=[2.0], trials=40,
            receivers=["blind", "mrc-fft"],
            blind=dict(iterations=2, derotate_at=1),
        ))
        assert main(["ber", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 0

    def test_seed_override(self, tmp_path):
        cfg = self._write(tmp_path, dict(snr_db=[4.0], trials=5))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["ber", "--config", str(cfg), "--out", str(a), "--seed", "99"])
        main(["ber", "--config", str(cfg), "--out", str(b), "--seed", "99"])
        assert a.read_bytes() == b.read_bytes()
        main(["ber", "--config", str(cfg), "--out", str(b), "--seed", "100"])
        assert a.read_bytes() != b.read_bytes()

    def test_threads_flag_same_output(self, tmp_path):
        cfg = self._write(tmp_path, dict(snr_db=[4.0], trials=6))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["ber", "--config", str(cfg), "--out", str(a), "--threads", "1"])
        main(["ber", "--config", str(cfg), "--out", str(b), "--threads", "2"])
        assert a.read_bytes() == b.read_bytes()
