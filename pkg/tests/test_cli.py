import csv
import json
import math

import pytest

from vfield_lab import __version__
from vfield_lab.cli import CONFIG_ENV, main, parse_angle, resolve_config
from vfield_lab.errors import ConfigError


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_volume_json_schema(capsys):
    code, d = run_json(capsys, ["volume", "--loxodromic", "0.7853981634"])
    assert code == 0
    assert d["header"]["tool"] == "vfield-lab" and d["header"]["version"] == __version__
    assert d["volume"] == pytest.approx(2 * math.pi**2, rel=1e-10)
    assert set(d["per_hemisphere"]) == {"north", "south"}
    assert d["bound"]["I_N"] == 1 and d["bound"]["I_S"] == 1
    assert set(d["sharpness"]) >= {"sup_i", "sup_ii"}
    assert d["error_estimate"] < 1e-6


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["volume", "--loxodromic", "0.5", "--nphi", "64", "--nlambda", "64", "--out", str(a)]) == 0
    assert main(["volume", "--loxodromic", "0.5", "--nphi", "64", "--nlambda", "64", "--out", str(b)]) == 0
    ta, tb = a.read_text(), b.read_text()
    assert ta.replace(str(a), "") == tb.replace(str(b), "")


def test_index_command(capsys):
    code, d = run_json(capsys, ["index", "--test-field", "k=1,a=0,m=1"])
    assert code == 0
    got = {(r["pole"], r["method"]): r["index"] for r in d["reports"]}
    assert got == {("N", "winding"): 2, ("S", "winding"): 0, ("N", "connection-form"): 2, ("S", "connection-form"): 0}
    assert d["methods_agree"] and d["index_sum"] == 2


def test_trace_csv_and_plot(tmp_path):
    out = tmp_path / "spiral.csv"
    assert main(["trace", "--theta0", "0.7853981634", "--start", "0,0", "--smax", "1", "--out", str(out), "--plot"]) == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["s", "phi", "lambda", "x", "y", "z"]
    phi, lam = float(rows[-1][1]), float(rows[-1][2])
    assert lam == pytest.approx(math.log(1 / math.cos(phi) + math.tan(phi)), abs=1e-8)
    meta = json.loads((tmp_path / "spiral.csv.meta.json").read_text())
    assert meta["header"]["config"]["theta0"] == pytest.approx(math.pi / 4)
    assert (tmp_path / "spiral.png").stat().st_size > 0


def test_curvature_map_csv(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["curvature-map", "--test-field", "k=0,a=0.3,m=1", "--nphi", "6", "--nlambda", "8",
                 "--method", "both", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 2 * 6 * 8
    by = {}
    for r in rows:
        by.setdefault((r["phi"], r["lambda"]), {})[r["method"]] = float(r["kappa"])
    for v in by.values():
        assert v["closed-form"] == pytest.approx(v["extrinsic"], abs=1e-6)


def test_minimize_writes_checkpoint(tmp_path):
    out = tmp_path / "run.json"
    code = main(["minimize", "--test-field", "k=0,a=0.3,m=1", "--nphi", "16", "--nlambda", "32", "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())
    assert d["report"]["status"] == "converged"
    ck = json.loads((tmp_path / "run.ckpt.json").read_text())
    assert ck["mesh"] == [16, 32]
    out2 = tmp_path / "again.json"
    assert main(["minimize", "--grid", str(tmp_path / "run.ckpt.json"), "--out", str(out2)]) == 0
    assert json.loads(out2.read_text())["report"]["iterations"] == 0


def test_non_convergence_exit_code(tmp_path):
    code = main(["minimize", "--test-field", "k=0,a=0.3,m=1", "--nphi", "16", "--nlambda", "32",
                 "--max-iter", "1", "--tol", "1e-14", "--out", str(tmp_path / "r.json")])
    assert code == 3


@pytest.mark.parametrize("bad", ["45deg", "45", "0.5°", "1d", "abc"])
def test_degrees_rejected(bad, capsys):
    assert main(["trace", "--theta0", bad]) == 2


def test_parse_angle_accepts_radians():
    assert parse_angle("-0.5") == -0.5
    assert parse_angle(6.283185307) == pytest.approx(2 * math.pi, abs=1e-8)
    with pytest.raises(ConfigError):
        parse_angle("7")


def test_missing_or_conflicting_field(capsys):
    assert main(["volume"]) == 2
    assert main(["volume", "--loxodromic", "0", "--test-field", "k=0"]) == 2
    assert main(["volume", "--test-field", "k=0,q=1"]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nphi": 64, "nlambda": 128, "loxodromic": 0.3}))
    c = resolve_config(["volume", "--nphi", "32"], environ={CONFIG_ENV: str(cfg)})
    assert (c.nphi, c.nlambda, c.loxodromic) == (32, 128, 0.3)
    c = resolve_config(["volume", "--config", str(cfg)], environ={})
    assert c.nphi == 64


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["volume", "--loxodromic", "0", "--config", str(cfg)]) == 2


def test_threads_is_echoed(capsys):
    code, d = run_json(capsys, ["index", "--loxodromic", "0", "--threads", "4"])
    assert code == 0 and d["header"]["config"]["threads"] == 4
