import csv
import json
import subprocess
import sys

import pytest

from limfeed import grassmann as gm
from limfeed.cli import main
from limfeed.codebook import load_codebook


def shrink(path, trials=20, grid=(0.0, 10.0)):
    d = json.loads(path.read_text())
    d["trials"] = trials
    d["snr_grid_db"] = list(grid)
    for s in d["schemes"]:
        if "root_trials" in s:
            s["root_trials"] = 300
    path.write_text(json.dumps(d))


@pytest.mark.parametrize("name", ["fig3-mi", "fig3-ber", "fig4"])
def test_preset_writes_scenario(tmp_path, name):
    out = tmp_path / "sc.json"
    assert main(["preset", name, "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert {"model", "m", "snr_grid_db", "schemes", "trials", "seed", "metric"} <= set(d)


def test_run_writes_csv(tmp_path):
    cfg, out = tmp_path / "sc.json", tmp_path / "out.csv"
    main(["preset", "fig3-mi", "--out", str(cfg)])
    shrink(cfg)
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "5", "--threads", "2"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 6
    assert set(rows[0]) == {"snr_db", "scheme", "metric", "value", "stderr", "trials"}
    serial = tmp_path / "serial.csv"
    main(["run", "--config", str(cfg), "--out", str(serial), "--seed", "5"])
    assert serial.read_bytes() == out.read_bytes()


def test_packing_and_codebook(tmp_path, capsys):
    root = tmp_path / "root.json"
    assert main(["packing", "--nt", "4", "--m", "2", "--n", "4", "--theta", "0.8", "--trials", "500",
                 "--out", str(root)]) == 0
    cs = gm.load_codeset(root)
    assert len(cs) == 4 and cs.theta == 0.8
    cfg = tmp_path / "build.json"
    cb_path = tmp_path / "cb.json"
    cfg.write_text(json.dumps({"model": "fig3", "m": 2, "b": 4, "beta": 0.1, "n_rvq": 5,
                               "root_file": str(root), "out": str(cb_path)}))
    assert main(["codebook", "build", "--config", str(cfg)]) == 0
    cb = load_codebook(cb_path)
    assert len(cb) == 16
    capsys.readouterr()
    assert main(["codebook", "inspect", "--config", str(cb_path)]) == 0
    text = capsys.readouterr().out
    assert "provenance: statistical=3, local=8, rvq=5" in text
    assert "min pairwise distance" in text and "gain_ratio" in text


def test_codebook_build_with_inline_root(tmp_path):
    cfg = tmp_path / "build.json"
    cfg.write_text(json.dumps({"model": {"type": "iid", "n_r": 4, "n_t": 4}, "m": 1, "b": 2, "beta": 0.5,
                               "root": {"n": 3, "theta": 0.7, "trials": 100}, "seed": 2}))
    out = tmp_path / "cb.json"
    assert main(["codebook", "build", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(load_codebook(out)) == 4


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "iid4", "m": 9, "snr_grid_db": [0], "schemes": []}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["run", "--config", str(bad), "--out", "x.csv", "--threads", "0"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["preset", "fig7", "--out", "x.json"])


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "sc.json"
    res = subprocess.run([sys.executable, "-m", "limfeed.cli", "preset", "fig4", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(out.read_text())["m"] == 3
