import csv
import io
import math
import re
import subprocess
import sys
from pathlib import Path

import matplotlib
import numpy as np
import pytest

from vlfatr.cli import fmt, l_grid, main
from vlfatr.plot import read_compare_csv, render_svg

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_MPL = "3.10.9"


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def parse_kv(text):
    return dict(line.split(None, 1) for line in text.strip().splitlines())


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestCapacity:
    def test_bsc(self):
        code, text = run(["capacity", "--bsc", "0.11"])
        assert code == 0
        kv = parse_kv(text)
        assert float(kv["capacity_bits"]) == pytest.approx(0.5, abs=1e-3)
        assert float(kv["a0_nats"]) == pytest.approx(math.log(1.78), rel=1e-9)
        assert float(kv["dispersion_nats2"]) == pytest.approx(0.4279, abs=1e-4)

    def test_default_is_bsc_011(self):
        assert run(["capacity"])[1] == run(["capacity", "--bsc", "0.11"])[1]

    def test_useless(self):
        kv = parse_kv(run(["capacity", "--bsc", "0.5"])[1])
        assert float(kv["capacity_bits"]) == 0.0

    def test_bec(self):
        kv = parse_kv(run(["capacity", "--bec", "0.25"])[1])
        assert float(kv["capacity_bits"]) == pytest.approx(0.75, abs=1e-9)

    def test_file_3x3_against_grid(self, tmp_path):
        from test_channel import _grid_capacity

        w = np.array([[0.6, 0.3, 0.1], [0.05, 0.15, 0.8], [0.3, 0.4, 0.3]])
        f = tmp_path / "ch.txt"
        f.write_text("# a 3x3 channel\n3 3\n" + "\n".join(" ".join(map(str, r)) for r in w) + "\n")
        code, text = run(["capacity", "--file", str(f)])
        assert code == 0
        kv = parse_kv(text)
        grid = _grid_capacity(w)
        assert float(kv["capacity_nats"]) == pytest.approx(grid, abs=1e-4)
        assert float(kv["capacity_nats"]) >= grid - 1e-9
        assert sum(float(v) for v in kv["input_dist"].split()) == pytest.approx(1.0)

    def test_file_input_line_is_respected(self, tmp_path):
        f = tmp_path / "ch.txt"
        f.write_text("2 2\n0.89 0.11\n0.11 0.89\ninput 0.9 0.1\n")
        kv = parse_kv(run(["capacity", "--file", str(f)])[1])
        assert kv["input_dist"] == "0.9 0.1"
        assert float(kv["capacity_bits"]) < 0.5

    @pytest.mark.parametrize("argv", [
        ["capacity", "--bsc", "0.7"],
        ["capacity", "--file", "/nonexistent/ch.txt"],
        ["capacity", "--bsc", "0.1", "--bec", "0.1"],
        ["capacity", "--bsc", "abc"],
        ["nosuchcommand"],
    ])
    def test_input_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            code = main(argv, out=io.StringIO())
            raise SystemExit(code)
        assert exc.value.code == 1

    def test_malformed_file(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("2 2\n0.5 0.4\n0 1\n")
        assert run(["capacity", "--file", str(f)])[0] == 1


class TestCompare:
    def test_columns_and_L(self):
        code, text = run(["compare", "--d", "1", "7", "--L-min", "10", "--L-max", "500"])
        assert code == 0
        assert text.splitlines()[0] == "L,d,atr_vlf_bits,atr_approx_bits,atr_nofb_bits,alpha_star,feasible"
        rows = rows_of(text)
        assert {r["d"] for r in rows} == {"1", "7"}
        for r in rows:
            assert int(r["L"]) % int(r["d"]) == 0
            assert (r["atr_vlf_bits"] == "") == (r["feasible"] == "0")

    def test_l_grid_covers_range(self):
        ls = l_grid(50, 10, 10_000, 32)
        assert ls == sorted(set(ls))
        assert ls[0] == 1 and ls[-1] == 200

    @pytest.mark.parametrize("d,target", [(1, 120), (50, 450)])
    def test_crossing_brackets(self, d, target):
        text = run(["compare", "--d", str(d)])[1]
        rows = [r for r in rows_of(text) if r["feasible"] == "1"]
        cross = [
            (int(a["L"]), int(b["L"])) for a, b in zip(rows, rows[1:])
            if (float(a["atr_vlf_bits"]) > float(a["atr_nofb_bits"]))
            != (float(b["atr_vlf_bits"]) > float(b["atr_nofb_bits"]))
        ]
        assert len(cross) == 1
        lo, hi = cross[0]
        assert 0.8 * target <= hi and lo <= 1.2 * target

    def test_all_infeasible_exits_2(self):
        code, text = run(["compare", "--epsilon", "1e-30", "--d", "1", "--L-min", "5", "--L-max", "20"])
        assert code == 2
        rows = rows_of(text)
        assert rows and all(r["feasible"] == "0" for r in rows)

    def test_nats(self):
        text = run(["compare", "--d", "1", "--L-min", "500", "--L-max", "500", "--nats"])[1]
        bits = run(["compare", "--d", "1", "--L-min", "500", "--L-max", "500"])[1]
        assert "atr_vlf_nats" in text.splitlines()[0]
        v_n = float(rows_of(text)[0]["atr_vlf_nats"])
        v_b = float(rows_of(bits)[0]["atr_vlf_bits"])
        assert v_n == pytest.approx(v_b * math.log(2), rel=1e-9)

    def test_writes_file(self, tmp_path):
        out = tmp_path / "c.csv"
        code, text = run(["compare", "--d", "1", "--L-max", "100", "--out", str(out)])
        assert code == 0 and text == ""
        assert out.read_text().startswith("L,d,")

    @pytest.mark.parametrize("argv", [
        ["compare", "--epsilon", "1.5"],
        ["compare", "--d", "0"],
        ["compare", "--L-min", "100", "--L-max", "10"],
    ])
    def test_bad_args(self, argv):
        assert run(argv)[0] == 1


class TestFormat:
    @pytest.mark.parametrize("v,want", [
        (None, ""), (True, "1"), (False, "0"), (12, "12"), (2**70, str(2**70)),
        (0.1, "0.1"), (1 / 3, "0.3333333333"), (123456789.123, "123456789.1"), (1e-20, "1e-20"),
        (np.float64(2.5), "2.5"), (np.int64(-3), "-3"),
    ])
    def test_fmt(self, v, want):
        assert fmt(v) == want

    def test_ten_significant_digits(self):
        text = run(["compare", "--d", "1", "--L-min", "300", "--L-max", "3000"])[1]
        for r in rows_of(text):
            for key in ("atr_vlf_bits", "atr_approx_bits", "atr_nofb_bits", "alpha_star"):
                cell = r[key]
                if cell in ("", "0"):
                    continue
                mant = re.sub(r"e.*$", "", cell).replace("-", "").replace(".", "").lstrip("0")
                assert len(mant) <= 10
                assert "," not in cell


class TestSimulate:
    def test_default_summary(self, tmp_path):
        out = tmp_path / "s.csv"
        code, text = run(["simulate", "--trials", "20000", "--out", str(out)])
        assert code == 0
        assert "error_rate_upper95 <= epsilon: PASS" in text
        assert "mean_tau_star <= lemma2_etau_cap + 3 SE: PASS" in text
        row = rows_of(out.read_text())[0]
        assert row["m"] == "4371343268989116"
        assert row["engine"] == "collapsed"
        assert float(row["lemma2_etau_cap"]) == pytest.approx(25.309, abs=1e-3)

    def test_single_trial_is_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        ra = run(["simulate", "--trials", "1", "--seed", "7", "--out", str(a)])
        rb = run(["simulate", "--trials", "1", "--seed", "7", "--out", str(b)])
        assert ra == rb
        assert a.read_bytes() == b.read_bytes()

    def test_workers_give_identical_csv(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["simulate", "--trials", "20000", "--seed", "3"]
        run(base + ["--workers", "1", "--out", str(a)])
        run(base + ["--workers", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_huge_gamma(self, tmp_path):
        out = tmp_path / "s.csv"
        code, _ = run(["simulate", "--m", "4", "--gamma", "1e9", "--trials", "40000", "--out", str(out)])
        assert code == 0
        row = rows_of(out.read_text())[0]
        assert float(row["mean_tau_star"]) == 40.0
        assert float(row["error_rate"]) == pytest.approx(0.75, abs=0.01)
        assert float(row["p_no_detect"]) == 1.0
        assert row["lemma2_etau_cap"] == ""

    def test_infeasible_needs_overrides(self):
        assert run(["simulate", "--epsilon", "1e-30", "--d", "1", "--l", "5"])[0] == 1
        code, _ = run(["simulate", "--epsilon", "1e-30", "--d", "1", "--l", "5", "--m", "2",
                       "--gamma", "1.0", "--trials", "10"])
        assert code == 0

    def test_bec_large_m_is_input_error(self):
        assert run(["simulate", "--bec", "0.3", "--m", "1000", "--gamma", "2", "--trials", "10"])[0] == 1


class TestPlot:
    def test_round_trip_from_compare(self, tmp_path):
        c = tmp_path / "c.csv"
        s = tmp_path / "c.svg"
        run(["compare", "--d", "1", "50", "--L-max", "2000", "--out", str(c)])
        code, _ = run(["plot", str(c), "--out", str(s)])
        assert code == 0
        assert s.read_bytes().lstrip().startswith(b"<?xml")

    def test_deterministic(self, tmp_path):
        unit, rows = read_compare_csv(GOLDEN / "fig1.csv")
        assert render_svg(unit, rows) == render_svg(unit, rows)

    def test_deterministic_across_processes(self, tmp_path):
        outs = []
        for k in range(2):
            p = tmp_path / f"{k}.svg"
            subprocess.run([sys.executable, "-m", "vlfatr", "plot", str(GOLDEN / "single.csv"), "--out", str(p)],
                           check=True, capture_output=True)
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    @pytest.mark.skipif(matplotlib.__version__ != GOLDEN_MPL, reason="golden SVGs recorded with matplotlib " + GOLDEN_MPL)
    @pytest.mark.parametrize("name", ["single", "fig1"])
    def test_golden(self, name, tmp_path):
        out = tmp_path / f"{name}.svg"
        assert run(["plot", str(GOLDEN / f"{name}.csv"), "--out", str(out)])[0] == 0
        assert out.read_bytes() == (GOLDEN / f"{name}.svg").read_bytes()

    def test_empty_csv_is_error(self, tmp_path):
        code, _ = run(["plot", str(GOLDEN / "empty.csv"), "--out", str(tmp_path / "e.svg")])
        assert code == 1
        assert not (tmp_path / "e.svg").exists()

    def test_not_a_compare_csv(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("a,b\n1,2\n")
        assert run(["plot", str(f), "--out", str(tmp_path / "x.svg")])[0] == 1

    def test_missing_file(self, tmp_path):
        assert run(["plot", str(tmp_path / "none.csv")])[0] == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "vlfatr", "capacity"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("capacity_bits 0.50")
