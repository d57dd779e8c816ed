import json
import subprocess
import sys

import pytest

from agesim.cli import main
from agesim.weights import LayerSpec, save_network, synthesize_network

RUN_INI = """
[network]
source = uniform
blocks = 20

[accelerator]
kind = baseline
memory_kb = 1

[policy]
policy = {policy}

[run]
inferences = 1
"""


@pytest.fixture
def ini(tmp_path):
    def make(policy="none", name="r.ini", where=None):
        d = where or tmp_path
        d.mkdir(exist_ok=True)
        p = d / name
        p.write_text(RUN_INI.format(policy=policy))
        return p
    return make


def test_run(ini, tmp_path, capsys):
    assert main(["run", str(ini()), "--out", str(tmp_path / "o"), "--dump-map"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["k_inf"] == 20
    assert (tmp_path / "o" / "dutycycle.bin").stat().st_size == 8192 * 8


def test_compare(ini, tmp_path, capsys):
    main(["run", str(ini()), "--out", str(tmp_path / "o")])
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "o"), "--K", "20"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["cells"] == 8192 and doc["rows"][6]["within_3sigma"]


def test_matrix(ini, tmp_path, capsys):
    cdir = tmp_path / "cfgs"
    for p in ("none", "inversion", "trbg"):
        ini(p, f"{p}.ini", cdir)
    assert main(["matrix", str(cdir), "--out", str(tmp_path / "m")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    assert (tmp_path / "m" / "matrix.csv").exists()
    assert (tmp_path / "m" / "trbg" / "histogram.csv").exists()


def test_bits(tmp_path, capsys):
    net = synthesize_network([LayerSpec.fc(4, 8)], seed=1, name="tiny")
    manifest = save_network(net, tmp_path / "net")
    assert main(["bits", str(manifest), "--format", "float32", "--format", "int8-asymmetric"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bit_index,tiny/float32,tiny/int8-asymmetric"
    assert len(lines) == 33


def test_prob_curve(capsys):
    assert main(["prob", "--K", "20"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12 and lines[-1] == "10,0.5,1.0"


def test_prob_point(capsys):
    assert main(["prob", "--K", "20", "--b", "6", "--cells", "8192", "--n", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["P_b"] == pytest.approx(0.11531829833984375, rel=1e-12)
    assert doc["P_n"] == pytest.approx(1.0)


def test_error_json(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.ini")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"


def test_bad_prob_args(capsys):
    assert main(["prob", "--K", "0"]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "ValueError"


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "agesim.cli", "prob", "--K", "4", "--rho", "0.5",
                           "--b", "0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["P_b"] == pytest.approx(0.125)
