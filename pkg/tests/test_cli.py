import json
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest

from polyscat.cli import emit_plot_data, run
from polyscat.errors import UnknownResultType
from polyscat.forward import read_field_dump
from polyscat.hashing import file_hash

DATA = files("polyscat") / "data"


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def _jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def _small_cfg(tmp_path, **extra):
    cfg = {"potential": {"builtin": "disc", "radius": 0.5, "value": [0.3, 0.0]}, "k": 2.0,
           "grid": {"n": 2, "R": 1.0, "N": 32}, "n_dirs": 16}
    cfg.update(extra)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_forward_bundled_disc(tmp_path):
    out = tmp_path / "fwd"
    assert run(["forward", "--config", str(DATA / "disc_benchmark.json"), "--out", str(out)]) == 0
    m = _manifest(out)
    assert m["status"] == "ok" and m["command"] == "forward"
    assert m["artifacts"]["field.bin"] == file_hash(out / "field.bin")
    header, us, u = read_field_dump(out / "field.bin")
    assert us.shape == (128, 128) and header["k"] == 1.0


def test_farfield_csv(tmp_path):
    out = tmp_path / "ff"
    assert run(["farfield", "--config", str(_small_cfg(tmp_path)), "--out", str(out)]) == 0
    lines = (out / "pattern.csv").read_text().splitlines()
    assert sum(not l.startswith("#") for l in lines) == 17
    assert _manifest(out)["summary"]["norm"] > 0


def test_conelab_certify_square_cone(tmp_path):
    out = tmp_path / "cone"
    assert run(["conelab", "certify", "--config", str(DATA / "square_cone.json"), "--out", str(out)]) == 0
    recs = _jsonl(out / "certification.jsonl")
    by_eps = {}
    for r in recs:
        by_eps.setdefault(r["eps"], []).append(r)
    assert len(by_eps) == 4 and all(len(v) == 9 for v in by_eps.values())
    # C1 part grows as eps shrinks; s^n |T(s rho)| does not depend on s
    c1 = [by_eps[e][0]["C1_part"] for e in sorted(by_eps, reverse=True)]
    assert c1 == sorted(c1)
    for v in by_eps.values():
        vals = [r["sn_abs_T"] for r in v]
        assert (max(vals) - min(vals)) / max(vals) < 1e-10


def test_conelab_split(tmp_path):
    out = tmp_path / "split"
    assert run(["conelab", "split", "--config", str(DATA / "square_cone.json"), "--out", str(out)]) == 0
    assert [r["eps"] for r in _jsonl(out / "split.jsonl")] == [0.2, 0.1, 0.05, 0.025]


def test_missing_config_exit_2(tmp_path):
    out = tmp_path / "err"
    missing = tmp_path / "nowhere.json"
    assert run(["forward", "--config", str(missing), "--out", str(out)]) == 2
    err = json.loads((out / "error.json").read_text())
    assert err["type"] == "MissingFile" and err["path"] == str(missing)
    assert _manifest(out)["status"] == "error"


def test_missing_geometry_file_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"geometry_file": "absent.json", "values": [[1, 0]]}))
    out = tmp_path / "err"
    assert run(["forward", "--config", str(cfg), "--out", str(out)]) == 2
    assert json.loads((out / "error.json").read_text())["path"].endswith("absent.json")


def test_out_of_range_default_rejected(tmp_path):
    out = tmp_path / "bad"
    assert run(["forward", "--config", str(_small_cfg(tmp_path)), "--override", "k=-1", "--out", str(out)]) == 2
    assert json.loads((out / "error.json").read_text())["type"] == "InputError"


def test_numerical_failure_exit_1(tmp_path):
    cfg = _small_cfg(tmp_path, solver={"method": "born", "terms": 30},
                     potential={"builtin": "disc", "radius": 0.8, "value": [8.0, 0.0]}, k=3.0)
    out = tmp_path / "div"
    assert run(["forward", "--config", str(cfg), "--out", str(out)]) == 1
    assert json.loads((out / "error.json").read_text())["type"] == "DivergentSeries"


def test_override_changes_config_hash(tmp_path):
    cfg = str(_small_cfg(tmp_path))
    run(["farfield", "--config", cfg, "--out", str(tmp_path / "a")])
    run(["farfield", "--config", cfg, "--override", "k=2.5", "--out", str(tmp_path / "b")])
    ma, mb = _manifest(tmp_path / "a"), _manifest(tmp_path / "b")
    assert mb["config"]["k"] == 2.5 and ma["config_hash"] != mb["config_hash"]


def test_output_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("POLYSCAT_OUT", str(tmp_path / "root"))
    assert run(["farfield", "--config", str(_small_cfg(tmp_path))]) == 0
    assert (tmp_path / "root" / "farfield" / "pattern.csv").is_file()


def test_distinguish_deterministic(tmp_path):
    cfg = tmp_path / "d.json"
    cfg.write_text(json.dumps({"experiment": {"N": 64, "n_dirs": 16}, "n_pairs": 3, "seed": 5}))
    for name in ("a", "b"):
        assert run(["distinguish", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    a, b = (tmp_path / "a" / "ledger.jsonl").read_bytes(), (tmp_path / "b" / "ledger.jsonl").read_bytes()
    assert a == b and len(a.splitlines()) == 3
    assert run(["distinguish", "--config", str(cfg), "--seed", "6", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "ledger.jsonl").read_bytes() != a


def test_reconstruct_command(tmp_path):
    cfg = tmp_path / "r.json"
    cfg.write_text(json.dumps({"experiment": {"N": 64, "n_dirs": 32}, "seed": 2}))
    assert run(["reconstruct", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert _manifest(tmp_path / "r")["summary"]["max_relative_error"] <= 1e-3


def test_verify_nodal_bundled(tmp_path):
    out = tmp_path / "nodal"
    assert run(["verify", "--config", str(DATA / "pixel_forward.json"), "--out", str(out)]) == 0
    (rec,) = _jsonl(out / "verify.jsonl")
    assert rec["min_abs_u"] >= 0.5


def test_plot_rows(tmp_path):
    ledger = tmp_path / "c.jsonl"
    ledger.write_text("".join(json.dumps({"kind": "corner", "s": s, "re_J": 1.0 / s, "im_J": 0.0}) + "\n" for s in (32, 16)))
    out = tmp_path / "p"
    assert run(["plot", str(ledger), "--out", str(out)]) == 0
    rows = (out / "plot.csv").read_text().splitlines()
    assert rows[0] == "series,x,y" and rows[1] == "re_J,16.0,0.0625" and len(rows) == 5


def test_plot_unknown_kind(tmp_path):
    ledger = tmp_path / "x.jsonl"
    ledger.write_text(json.dumps({"kind": "weather"}) + "\n")
    with pytest.raises(UnknownResultType):
        emit_plot_data([ledger], tmp_path / "p.csv")
    assert run(["plot", str(ledger), "--out", str(tmp_path / "o")]) == 2


def test_defaults_listing(capsys):
    assert run(["defaults"]) == 0
    text = capsys.readouterr().out
    assert "solver.tol" in text and "n_dirs" in text


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "polyscat.cli", "defaults"], capture_output=True, text=True)
    assert res.returncode == 0 and "grid.N" in res.stdout
