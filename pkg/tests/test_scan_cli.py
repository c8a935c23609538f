import io
import json

import numpy as np
import pytest

from corrsist import bell, entdetect, steering
from corrsist.cli import main
from corrsist.families import DICKE_COORDS, GHZ_COORDS, TauMinCoords
from corrsist.scan import (
    COLUMNS,
    EmptyScanError,
    ScanConfig,
    ScanError,
    evaluate_points,
    region_counts,
    scan_tau_min,
    write_csv,
)


def _csv(cfg):
    buf = io.StringIO()
    write_csv(scan_tau_min(cfg), buf)
    return buf.getvalue()


def _rows(text):
    lines = text.strip().split("\n")
    return lines[0].split(","), [dict(zip(COLUMNS, ln.split(","))) for ln in lines[1:]]


class TestScan:
    def test_header_and_format(self):
        header, rows = _rows(_csv(ScanConfig(points=11)))
        assert header == list(COLUMNS)
        assert all(r["cond1"] in "01" for r in rows)
        assert not any(v == "-0" for r in rows for v in r.values())

    def test_named_rows(self):
        rows = evaluate_points(*np.array([DICKE_COORDS.array, GHZ_COORDS.array]).T)
        assert list(rows["pge_max"]) == [True, False]
        assert list(rows["pe_max"]) == [True, False]
        assert rows["s1"][0] == pytest.approx(1 / 3)
        assert rows["facet4_min"][1] == pytest.approx(2)

    def test_bell_pair_row_on_grid(self):
        _, rows = _rows(_csv(ScanConfig(points=9)))
        hit = [r for r in rows if (r["x0"], r["x1"], r["x2"]) == ("1", "0", "0")]
        assert len(hit) == 1 and hit[0]["x3"] == "0"
        assert hit[0]["cond1"] == "0" and hit[0]["pge_max"] == "0"

    def test_radicand_filter(self):
        cols = scan_tau_min(ScanConfig(points=21))
        norm = cols["x0"] ** 2 + cols["x1"] ** 2 + cols["x2"] ** 2 + cols["x3"] ** 2
        assert np.allclose(norm, 1) and np.all(cols["x3"] >= 0)

    def test_rows_sorted(self):
        cols = scan_tau_min(ScanConfig(points=15, both_signs=True))
        keys = list(zip(cols["x0"], cols["x1"], cols["x2"], cols["x3"]))
        assert keys == sorted(keys)
        assert np.any(cols["x3"] < 0)

    def test_serial_equals_parallel(self):
        assert _csv(ScanConfig(points=31, workers=1)) == _csv(ScanConfig(points=31, workers=6))

    def test_spot_check_against_modules(self):
        cols = scan_tau_min(ScanConfig(points=21))
        rng = np.random.default_rng(0)
        for i in rng.choice(cols["x0"].size, 100, replace=False):
            c = TauMinCoords((cols["x0"][i], cols["x1"][i], cols["x2"][i], cols["x3"][i]))
            assert cols["cond1"][i] == entdetect.cond_persist_ge(c)
            assert cols["cond2"][i] == entdetect.cond_persist_e(c)
            assert cols["s1"][i] == pytest.approx(entdetect.s_values(c).s1)
            assert cols["ps_max"][i] == all(v > 0 for v in steering.appendix_b_conditions(c))
            expected = min(bell.facet4_closed_max(c, w) for w in range(1, 5))
            assert cols["facet4_min"][i] == pytest.approx(expected)

    def test_regions_nonempty_at_default_scale(self):
        assert all(v > 0 for v in region_counts(scan_tau_min(ScanConfig(points=51))).values())

    def test_errors(self):
        with pytest.raises(ScanError):
            scan_tau_min(ScanConfig(points=1))
        with pytest.raises(ScanError):
            scan_tau_min(ScanConfig(lo=0.5, hi=0.2))
        with pytest.raises(EmptyScanError):
            scan_tau_min(ScanConfig(points=3, lo=0.99, hi=1.0))


class TestCli:
    def test_state_show_json(self, capsys):
        assert main(["state", "show", "--state", "ghz:3", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["n_qubits"] == 3 and out["pure"]
        assert out["amplitudes"]["re"][0] == pytest.approx(1 / np.sqrt(2))

    def test_tangle(self, capsys):
        assert main(["--json", "tangle", "--state", "w:4"]) == 0
        assert json.loads(capsys.readouterr().out)["tau1"] == pytest.approx(0.75)

    def test_detect(self, capsys):
        assert main(["detect", "--state", "w:3", "--property", "ge", "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["verdict"] == "Detected"

    def test_persistency(self, capsys):
        assert main(["persistency", "--state", "ghz:4", "--property", "ge", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert (out["lower"], out["upper"]) == (1, 1)

    def test_persistency_fast_path(self, capsys):
        assert main(["persistency", "--state", "dicke4", "--property", "GE", "--fast-path", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["lower"] == out["upper"] == 3

    def test_bell_max_and_member(self, capsys, tmp_path):
        assert main(["bell", "max", "--state", "w:3", "--restarts", "8", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["violated"]
        battery = tmp_path / "bat.json"
        battery.write_text(json.dumps({"settings": out["battery"]}))
        assert main(["bell", "member", "--state", "w:3", "--model", "ns2", "--battery", str(battery), "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["membership"] == "Outside"

    def test_steer(self, capsys):
        assert main(["steer", "--state", "taumin:1,0,0,0", "--json"]) == 2
        assert main(["steer", "genuine", "--state", "wmix:0.75", "--restarts", "8", "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["violated"]

    def test_scan_to_file(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        assert main(["scan", "--points", "11", "--out", str(path)]) == 0
        assert path.read_text().splitlines()[0] == ",".join(COLUMNS)
        assert "rows" in capsys.readouterr().out

    def test_scan_stdout_keeps_csv_clean(self, capsys):
        assert main(["scan", "--points", "5"]) == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("x0,")
        assert "rows" in json.loads(captured.err)

    def test_exit_codes(self, capsys):
        assert main(["state", "show", "--state", "bogus"]) == 2
        assert main(["detect", "--state", "ghz:4", "--property", "ge"]) == 2
        assert main(["scan", "--points", "3", "--lo", "0.99", "--hi", "1"]) == 3
        assert main(["state", "show", "--state", "wmix:0;filter=0"]) == 2
        # success probability eps^6 on |000>
        assert main(["state", "show", "--state", "wmix:0;filter=1e-5"]) == 3
        with pytest.raises(SystemExit):
            main(["nope"])

    def test_out_file(self, tmp_path):
        path = tmp_path / "t.txt"
        assert main(["tangle", "--state", "ghz:4", "--out", str(path)]) == 0
        assert path.read_text().startswith("tau1")
