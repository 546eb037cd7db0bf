import json
import os

import pytest

from tdstab.cli import main


def _write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return str(p)


SMALL = "[grid]\nN = 96\n[sweep]\nk = [8, 16]\nimag_multipliers = [0, -1]\ninequalities = ['s:a', 's:b']\n"


def test_check_flow_exit_codes(tmp_path):
    out = str(tmp_path / "o")
    assert main(["check-flow", "--out", out, "--grid-n", "64", "--no-figures"]) == 0
    with open(os.path.join(out, "assumptions.json")) as fh:
        assert json.load(fh)["ok"] is True
    assert main(["check-flow", "--out", out, "--profile", "InflectedTest"]) == 1
    assert main(["check-flow", "--out", out, "--profile", "Missing"]) == 2
    with open(os.path.join(out, "error.json")) as fh:
        assert json.load(fh)["exit_code"] == 2


def test_usage_errors(tmp_path):
    out = str(tmp_path / "o")
    assert main(["sweep", "--out", out, "--config", _write(tmp_path, "[sweep]\nk = []\n")]) == 2
    assert main(["sweep", "--out", out, "--grid-n", "4"]) == 2
    assert main(["frobnicate"]) == 2


def test_sweep_outputs_and_determinism(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["sweep", "--config", cfg, "--out", a]) == 0
    assert main(["sweep", "--config", cfg, "--out", b, "--workers", "2"]) == 0
    names = sorted(os.listdir(a))
    assert "sweep_bounds.csv" in names and "sweep_constants.png" in names
    for name in names:
        with open(os.path.join(a, name), "rb") as fa, open(os.path.join(b, name), "rb") as fb:
            assert fa.read() == fb.read(), name
    with open(os.path.join(a, "sweep_bounds.csv")) as fh:
        header = fh.readline().strip().split(",")
    for col in ("flow", "N", "Y_max", "k", "re_lambda", "im_lambda", "case", "id"):
        assert col in header


def test_resolvent_and_hns(tmp_path):
    out = str(tmp_path / "o")
    assert main(["resolvent", "--out", out, "--grid-n", "96", "--no-figures"]) == 0
    assert os.path.exists(os.path.join(out, "profile_k16_im0.csv"))
    cfg = _write(tmp_path, "[hns]\nN = 64\nk = [8, 16]\nimag_multipliers = [0]\n")
    assert main(["hns", "--config", cfg, "--out", out, "--no-figures"]) == 0
    assert os.path.exists(os.path.join(out, "hns_modes.csv"))


def test_evolve(tmp_path):
    out = str(tmp_path / "o")
    cfg = _write(tmp_path, "[grid]\nN = 64\n[evolve]\nk = [16, 24, 32, 48]\nT = 0.2\n")
    assert main(["evolve", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "gevrey.json")) as fh:
        doc = json.load(fh)
    assert len(doc["sigma"]) == 4 and "p" in doc
    assert os.path.exists(os.path.join(out, "trajectory_k16.csv"))
    assert os.path.exists(os.path.join(out, "evolve.png"))
