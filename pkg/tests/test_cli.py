import csv

import pytest

from abrsim.cli import main, parse_matrix
from abrsim.harness import ConfigError


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_short_run_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        rc = run_cli("run", "--scenario", "wan", "--duration", "0.2",
                     "--seed", "5", "--out", str(out))
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["scenario"] == "wan"
        assert float(rows[0]["tcp_throughput_mbps"]) > 0
        assert "eff=" in capsys.readouterr().out

    def test_trace_file(self, tmp_path):
        out, trace = tmp_path / "r.csv", tmp_path / "t.csv"
        rc = run_cli("run", "--duration", "0.2", "--out", str(out),
                     "--trace", str(trace))
        assert rc == 0
        with open(trace) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) > 10
        assert {"t_s", "q_cells", "z"} <= set(rows[0])

    def test_plot_dir(self, tmp_path):
        out = tmp_path / "r.csv"
        plots = tmp_path / "figs"
        rc = run_cli("run", "--duration", "0.2", "--out", str(out),
                     "--plot-dir", str(plots))
        assert rc == 0
        pngs = list(plots.glob("*.png"))
        assert len(pngs) == 4
        assert all(p.stat().st_size > 1000 for p in pngs)

    def test_bad_scenario_exits_nonzero(self, tmp_path, capsys):
        with pytest.raises(SystemExit):  # argparse rejects the choice
            run_cli("run", "--scenario", "lan", "--out", str(tmp_path / "r.csv"))

    def test_bad_config_reports_error(self, tmp_path, capsys):
        rc = run_cli("run", "--duration", "-1", "--out", str(tmp_path / "r.csv"))
        assert rc != 0
        assert "error:" in capsys.readouterr().err


class TestSweep:
    def test_matrix_parsing(self, tmp_path):
        matrix = tmp_path / "m.txt"
        matrix.write_text(
            "# grid\n"
            "video_mean = 5, 10\n"
            "mss=512\n"
            "duration = 0.1\n")
        axes = parse_matrix(str(matrix))
        assert axes == {"video_mean": [5.0, 10.0], "mss": [512],
                        "duration": [0.1]}

    def test_matrix_bad_key(self, tmp_path):
        matrix = tmp_path / "m.txt"
        matrix.write_text("warp_factor = 9\n")
        with pytest.raises(ConfigError):
            parse_matrix(str(matrix))

    def test_sweep_runs_grid(self, tmp_path, capsys):
        matrix = tmp_path / "m.txt"
        matrix.write_text("seed = 1, 2\nvideo_mean = 5, 10\nduration = 0.1\n")
        out = tmp_path / "sweep.csv"
        rc = run_cli("sweep", "--matrix", str(matrix), "--out", str(out),
                     "--quiet")
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert {(r["seed"], r["video_mean"]) for r in rows} == {
            ("1", "5.0"), ("1", "10.0"), ("2", "5.0"), ("2", "10.0")}
        assert "4 runs" in capsys.readouterr().out

    def test_sweep_empty_matrix_errors(self, tmp_path, capsys):
        matrix = tmp_path / "m.txt"
        matrix.write_text("# nothing here\n")
        rc = run_cli("sweep", "--matrix", str(matrix),
                     "--out", str(tmp_path / "s.csv"))
        assert rc != 0


class TestFgnDump:
    def test_dump_bounded(self, tmp_path):
        out = tmp_path / "rates.txt"
        rc = run_cli("fgn", "dump", "--length", "256", "--seed", "7",
                     "--out", str(out))
        assert rc == 0
        values = [float(x) for x in out.read_text().split()]
        assert values  # REJECT mode may drop some of the 256
        assert all(0.0 <= v <= 15.0 for v in values)

    def test_dump_raw_full_length(self, tmp_path):
        out = tmp_path / "raw.txt"
        rc = run_cli("fgn", "dump", "--length", "256", "--raw",
                     "--out", str(out))
        assert rc == 0
        assert len(out.read_text().split()) == 256

    def test_dump_to_stdout(self, capsys):
        rc = run_cli("fgn", "dump", "--length", "128", "--mode", "clip-zero")
        assert rc == 0
        assert len(capsys.readouterr().out.split()) == 128

    def test_dump_bad_hurst(self, capsys):
        rc = run_cli("fgn", "dump", "--hurst", "1.5")
        assert rc != 0
        assert "error:" in capsys.readouterr().err
