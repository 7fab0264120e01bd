import csv
import io
import json
from contextlib import redirect_stdout

import pytest

from zfmimo import cli, experiments as xp


def run_cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(argv)
    return code, buf.getvalue()


class TestBoundCommand:
    def test_basic_run(self):
        code, out = run_cli(["bound", "--scheme", "analog", "--m", "4",
                             "--snr-db", "0:30:5"])
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert tuple(rows[0]) == xp.RESULT_COLUMNS
        assert len(rows) - 1 == 7 * 3  # ideal / gap-bound / lower per point

    def test_output_file_with_sidecar(self, tmp_path):
        out_path = tmp_path / "rows.csv"
        code, _ = run_cli(["bound", "--scheme", "digital", "--m", "4",
                           "--beta1", "inf", "--beta2", "inf", "--beta-fb", "2",
                           "--snr-db", "10:20:5", "--out", str(out_path)])
        assert code == 0
        rows = xp.read_result_rows(out_path)
        assert len(rows) == 3 * 3
        with open(f"{out_path}.spec.json", encoding="utf-8") as fh:
            assert json.load(fh)["axis"] == "snr_db"

    def test_process_flag(self):
        code, out = run_cli(["bound", "--scheme", "perfect", "--m", "4",
                             "--beta2", "inf", "--process", "gm:0.9966",
                             "--delay", "1", "--snr-db", "10"])
        assert code == 0
        assert "gauss-markov" in out

    def test_domain_error_exit_code(self):
        code, _ = run_cli(["bound", "--scheme", "analog", "--m", "4",
                           "--beta-fb", "0.5", "--snr-db", "10"])
        assert code == 2

    def test_io_error_exit_code(self):
        code, _ = run_cli(["bound", "--scheme", "analog", "--m", "4",
                           "--snr-db", "10", "--out", "/nonexistent/dir/x.csv"])
        assert code == 4


class TestSimCommand:
    def test_genie_rows(self):
        code, out = run_cli(["sim", "--scheme", "analog", "--m", "2",
                             "--beta1", "inf", "--beta2", "inf",
                             "--snr-db", "10", "--trials", "20000", "--seed", "7"])
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        kinds = {r["bound_kind"] for r in rows}
        assert "genie-upper" in kinds
        genie = next(r for r in rows if r["bound_kind"] == "genie-upper")
        assert float(genie["ci95"]) > 0
        assert int(genie["trials"]) == 20000


class TestFigureCommand:
    def test_fig6_closed_form(self, tmp_path):
        out_path = tmp_path / "fig6.csv"
        code, _ = run_cli(["figure", "--tag", "fig6", "--out", str(out_path)])
        assert code == 0
        rows = xp.read_result_rows(out_path)
        assert {r.scheme for r in rows} == {"mac-analog(L=2)", "mac-digital(L=4)"}

    def test_bad_tag(self):
        with pytest.raises(SystemExit):
            run_cli(["figure", "--tag", "fig99"])


class TestMmseCommand:
    def test_closed_form(self):
        code, out = run_cli(["mmse", "--l", "2", "--m", "4", "--rho-db", "0:20:10"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("rho_db")
        assert len(lines) == 4

    def test_monte_carlo(self):
        code, out = run_cli(["mmse", "--l", "2", "--m", "4", "--rho-db", "10",
                             "--method", "mc", "--trials", "20000"])
        assert code == 0
        assert "monte-carlo" in out


class TestSpecfunCommand:
    def test_eval(self):
        code, out = run_cli(["specfun", "--fn", "exp_int", "--args", "1,0.4"])
        assert code == 0
        assert out.startswith("0.70238")

    def test_unknown_function(self):
        code, _ = run_cli(["specfun", "--fn", "nope", "--args", "1"])
        assert code == 2
