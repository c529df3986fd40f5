import io
import math
import subprocess
import sys as pysys

import numpy as np
import pytest

from focrb import scenarios, sysmodel
from focrb.scenarios import (ConfigError, ScenarioConfig, config_text,
                             emit_psd, make_config, parse_config_text,
                             rows_to_csv, run_point, run_sweep)
from focrb.sigcore import Polynomial
from focrb.sysmodel import ArmaxSystem, save_system_file


@pytest.fixture(scope="module")
def small_system_file(tmp_path_factory):
    """A fast low-order system on disk, exercising the file loader."""
    sys = ArmaxSystem(Polynomial([1.0, -1.5, 0.7]), Polynomial([1.0, 0.5]),
                      Polynomial([1.0, 0.4]), 1.0, 3.0)
    path = tmp_path_factory.mktemp("sys") / "arma21.txt"
    save_system_file(sys, path)
    return str(path)


@pytest.fixture(scope="module")
def blind_spot_file(tmp_path_factory):
    """System whose X polynomial vanishes at 0.75 Hz (B = 1 + q^-2)."""
    sys = ArmaxSystem(Polynomial([1.0, -0.3]), Polynomial([1.0, 0.0, 1.0]),
                      Polynomial([1.0]), 1.0, 3.0)
    path = tmp_path_factory.mktemp("sys") / "blind.txt"
    save_system_file(sys, path)
    return str(path)


class TestConfig:
    def test_parse_key_values(self):
        text = "case = both\nsamples= 1200  # override\n\n# comment\n"
        assert parse_config_text(text) == {"case": "both", "samples": "1200"}

    def test_bad_line_rejected(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("not a key value line")

    def test_defaults(self):
        cfg = make_config()
        assert cfg.samples == 5400 and cfg.trials == 1000
        assert cfg.fo_freq_hz == 0.353 and cfg.snr_db == 9.5
        assert cfg.fo_amp == 1.0 and cfg.fo_phase_rad == 0.8

    def test_overrides_win(self):
        cfg = make_config({"samples": "100"}, {"samples": 250})
        assert cfg.samples == 250

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            make_config({"samplez": "1"})

    def test_sweep_defaults_filled(self):
        cfg = make_config({"sweep": "freq"})
        assert len(cfg.sweep_values) == 29
        assert cfg.sweep_values[0] == 0.05 and cfg.sweep_values[-1] == 1.45
        assert make_config({"sweep": "snr"}).sweep_values == \
            (0.0, 5.0, 9.5, 15.0, 20.0, 30.0, 40.0)
        assert make_config({"sweep": "length"}).sweep_values == \
            (1350, 2700, 5400, 10800)

    def test_sweep_values_parsing(self):
        cfg = make_config({"sweep": "freq", "sweep_values": "0.1, 0.2,0.3"})
        assert cfg.sweep_values == (0.1, 0.2, 0.3)

    def test_invalid_values(self):
        for bad in ({"case": "3"}, {"snr_mode": "medium"},
                    {"sweep": "volume"}, {"samples": "-5"},
                    {"seed": "-1"}, {"trials": "0"}):
            with pytest.raises(ConfigError):
                make_config(bad)

    def test_config_text_round_trip(self):
        cfg = make_config({"sweep": "freq", "case": "2", "seed": "7"})
        back = make_config(parse_config_text(config_text(cfg)))
        assert back == cfg


class TestRunPoint:
    def test_both_cases_rows(self, small_system_file):
        cfg = make_config({"system": small_system_file, "samples": "800",
                           "trials": "16", "fo_freq_hz": "0.43"})
        rows = run_point(cfg)
        assert [r.case for r in rows] == ["case1", "case2"]
        for row in rows:
            assert row.error == ""
            assert row.sigma_e2 > 0
            assert row.sqrtcrb_a1 > 0 and row.sqrtcrb_f1_hz > 0
            assert row.mode_freq_hz > 0
        # matched seeds keep the propagated FO bounds close across cases
        r1, r2 = rows
        assert abs(r2.sqrtcrb_a1 / r1.sqrtcrb_a1 - 1) < 0.05
        assert abs(r2.sqrtcrb_f1_hz / r1.sqrtcrb_f1_hz - 1) < 0.05

    def test_ambient_row(self, small_system_file):
        cfg = make_config({"system": small_system_file, "samples": "800",
                           "trials": "8", "fo_amp": "0"})
        rows = run_point(cfg)
        assert len(rows) == 1
        row = rows[0]
        assert row.case == "ambient"
        assert math.isnan(row.sqrtcrb_a1)
        assert row.sqrtcrb_mode_freq_hz > 0

    def test_nyquist_frequency_rejected(self, small_system_file):
        cfg = make_config({"system": small_system_file,
                           "fo_freq_hz": "1.5"})
        with pytest.raises(ConfigError, match="Nyquist|outside"):
            run_point(cfg)

    def test_short_record_rejected(self, small_system_file):
        cfg = make_config({"system": small_system_file, "samples": "8"})
        with pytest.raises(ConfigError, match="exceed"):
            run_point(cfg)

    def test_local_vs_global_sigma(self, small_system_file):
        base = {"system": small_system_file, "samples": "800",
                "trials": "8", "fo_freq_hz": "0.43", "case": "1"}
        row_l = run_point(make_config(base, {"snr_mode": "local"}))[0]
        row_g = run_point(make_config(base, {"snr_mode": "global"}))[0]
        assert row_l.sigma_e2 != row_g.sigma_e2


class TestRunSweep:
    def test_rows_in_sweep_order(self, small_system_file):
        cfg = make_config({"system": small_system_file, "samples": "700",
                           "trials": "8", "case": "1", "sweep": "freq",
                           "sweep_values": "0.3,0.6,0.9"})
        rows = run_sweep(cfg)
        assert [r.fo_freq_hz for r in rows] == [0.3, 0.6, 0.9]
        assert [r.point_index for r in rows] == [0, 1, 2]

    def test_threading_bit_identical(self, small_system_file):
        base = {"system": small_system_file, "samples": "700",
                "trials": "8", "case": "both", "sweep": "freq",
                "sweep_values": "0.3,0.6,0.9"}
        out = []
        for threads in ("1", "3"):
            cfg = make_config(base, {"threads": threads})
            buf = io.StringIO()
            rows_to_csv(run_sweep(cfg, None), buf)
            out.append(buf.getvalue())
        assert out[0] == out[1]

    def test_failed_point_recorded_and_sweep_continues(self,
                                                       blind_spot_file):
        cfg = make_config({"system": blind_spot_file, "samples": "600",
                           "trials": "8", "case": "2", "sweep": "freq",
                           "sweep_values": "0.5,0.75,1.0"})
        rows = run_sweep(cfg)
        assert len(rows) == 3
        assert rows[0].error == "" and rows[2].error == ""
        assert "unobservable" in rows[1].error
        assert math.isnan(rows[1].sqrtcrb_a1)

    def test_length_sweep_changes_samples(self, small_system_file):
        cfg = make_config({"system": small_system_file, "trials": "8",
                           "case": "1", "sweep": "length",
                           "sweep_values": "400,800"})
        rows = run_sweep(cfg)
        assert [r.samples for r in rows] == [400, 800]
        assert rows[0].sqrtcrb_f1_hz > rows[1].sqrtcrb_f1_hz

    def test_length_sweep_white_sinusoid_exponents(self, white_system):
        # classical single-tone bounds: sqrt-CRB of frequency falls as
        # N^-3/2 and of amplitude as N^-1/2
        cfg = make_config({"trials": "2", "case": "1", "sweep": "length",
                           "sweep_values": "1000,2000,4000,8000",
                           "fo_freq_hz": "0.43"})
        rows = run_sweep(cfg, white_system)
        assert all(r.error == "" for r in rows)
        lengths = np.log([r.samples for r in rows])
        slope_f = np.polyfit(lengths,
                             np.log([r.sqrtcrb_f1_hz for r in rows]), 1)[0]
        slope_a = np.polyfit(lengths,
                             np.log([r.sqrtcrb_a1 for r in rows]), 1)[0]
        assert abs(slope_f + 1.5) < 0.1
        assert abs(slope_a + 0.5) < 0.1


class TestCsv:
    def test_header_and_formatting(self, small_system_file):
        cfg = make_config({"system": small_system_file, "samples": "800",
                           "trials": "8", "case": "1"})
        buf = io.StringIO()
        rows_to_csv(run_point(cfg), buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == ",".join(scenarios.CSV_COLUMNS)
        cells = lines[1].split(",")
        assert cells[0] == "case1"
        sigma_cell = cells[scenarios.CSV_COLUMNS.index("sigma_e2")]
        assert "e" in sigma_cell and len(sigma_cell.split("e")[0]) == 13

    def test_nan_rendered_empty(self):
        row = scenarios.CrbReport(case="ambient", fo_freq_hz=0.3, fo_amp=0.0,
                                  fo_phase_rad=0.0, snr_db=9.5,
                                  snr_mode="global", samples=100, trials=4,
                                  base_seed=0, point_index=0)
        buf = io.StringIO()
        rows_to_csv([row], buf)
        cells = buf.getvalue().strip().split("\n")[1].split(",")
        assert cells[scenarios.CSV_COLUMNS.index("sqrtcrb_a1")] == ""


class TestPsd:
    def test_white_constant(self):
        sys = ArmaxSystem(Polynomial([1.0]), Polynomial([1.0]),
                          Polynomial([1.0]), 2.0, 3.0)
        table = emit_psd(make_config(), sys)
        assert table.shape == (2048, 2)
        assert np.allclose(table[:, 1], 2.0)

    def test_grid_endpoints(self, surrogate):
        table = emit_psd(make_config(), surrogate)
        assert table[0, 0] == 0.0
        assert table[-1, 0] < surrogate.fs / 2

    def test_surrogate_peak(self, surrogate):
        table = emit_psd(make_config(), surrogate)
        peak = table[np.argmax(table[:, 1]), 0]
        assert abs(peak - 0.372) < 0.01


def run_cli(*args):
    return subprocess.run([pysys.executable, "-m", "focrb", *args],
                          capture_output=True, text=True, timeout=300)


class TestCli:
    def test_point_stdout_csv(self, small_system_file):
        res = run_cli("point", "--system", small_system_file, "--case", "1",
                      "--samples", "700", "--trials", "4",
                      "--fo-freq-hz", "0.43")
        assert res.returncode == 0, res.stderr
        lines = res.stdout.strip().split("\n")
        assert lines[0].startswith("case,")
        assert len(lines) == 2

    def test_point_out_file(self, small_system_file, tmp_path):
        out = tmp_path / "row.csv"
        res = run_cli("point", "--system", small_system_file, "--case", "1",
                      "--samples", "700", "--trials", "4", "--out", str(out))
        assert res.returncode == 0, res.stderr
        assert out.read_text().startswith("case,")

    def test_config_file_and_override(self, small_system_file, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(f"system = {small_system_file}\n"
                           "case = 1\nsamples = 700\ntrials = 4\n")
        res = run_cli("point", "--config", str(cfgfile), "--trials", "2")
        assert res.returncode == 0, res.stderr

    def test_print_config(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("case = 2\nseed = 9\n")
        res = run_cli("point", "--config", str(cfgfile), "--samples", "111",
                      "--print-config")
        assert res.returncode == 0
        parsed = parse_config_text(res.stdout)
        assert parsed["case"] == "2"
        assert parsed["samples"] == "111"
        assert parsed["seed"] == "9"

    def test_config_error_exit_code(self):
        res = run_cli("point", "--samples", "-3")
        assert res.returncode == 1
        assert "config error" in res.stderr

    def test_missing_sweep_axis(self):
        res = run_cli("sweep")
        assert res.returncode == 1

    def test_numerical_failure_exit_code(self, blind_spot_file):
        res = run_cli("sweep", "--system", blind_spot_file, "--case", "2",
                      "--samples", "600", "--trials", "4", "--sweep", "freq",
                      "--sweep-values", "0.75")
        assert res.returncode == 2
        assert "unobservable" in res.stderr

    def test_psd_command(self, small_system_file):
        res = run_cli("psd", "--system", small_system_file)
        assert res.returncode == 0
        lines = res.stdout.strip().split("\n")
        assert lines[0] == "freq_hz,psd"
        assert len(lines) == 2049
