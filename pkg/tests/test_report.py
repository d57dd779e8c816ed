import json
import os

import numpy as np
import pytest

from agesim import report
from agesim.aging import histogram
from agesim.bitstats import bit_distribution
from agesim.probmodel import deviation_curve
from agesim.sim import RunConfig, RunResult, run
from agesim.encoders import EncodingPolicy


def small_run(seed=0):
    return run(RunConfig(source="uniform", uniform_blocks=4, accelerator="baseline", memory_kb=1,
                         policy=EncodingPolicy("trbg", bias=0.7), inferences=3, seed=seed))


def test_histogram_golden():
    h = histogram([10.82, 10.82, 10.82, 26.12], bins=[10.82, 18.47, 26.12])
    assert report.histogram_csv(h) == (
        "bin_lo,bin_hi,count,pct\n"
        "10.82,18.47,3,75.0\n"
        "18.47,26.12,1,25.0\n"
    )


def test_bits_golden():
    d = bit_distribution(np.array([0b01, 0b11, 0b00, 0b01], dtype=np.uint8), 8)
    lines = report.bits_csv(d).splitlines()
    assert lines[:3] == ["bit_index,p_one", "0,0.75", "1,0.25"]
    assert len(lines) == 9


def test_bits_multi_column():
    a = bit_distribution(np.zeros(2, np.uint8), 8)
    b = bit_distribution(np.full(2, 0xFFFFFFFF, np.uint32), 32)
    lines = report.bits_csv({"a": a, "b": b}).splitlines()
    assert lines[0] == "bit_index,a,b"
    assert lines[1] == "0,0.0,1.0"
    assert lines[-1] == "31,,1.0"


def test_curve_k20(tmp_path):
    files = report.emit(deviation_curve(20, 0.5), tmp_path)
    lines = files[0].read_text().splitlines()
    assert lines[0] == "b,b_over_K,P"
    assert len(lines) == 12
    assert lines[-1] == "10,0.5,1.0"
    b, bk, pb = lines[7].split(",")
    assert (b, bk) == ("6", "0.3")
    assert float(pb) == pytest.approx(120920 / 1048576, rel=1e-12)


def test_run_files_byte_identical(tmp_path):
    report.emit(small_run(), tmp_path / "a", raw_map=True)
    report.emit(small_run(), tmp_path / "b", raw_map=True)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["dutycycle.bin", "histogram.csv", "run.json", "summary.json"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_reemit_after_reload_identical(tmp_path):
    r = small_run()
    report.emit(r, tmp_path / "a")
    back = RunResult.from_dict(json.loads((tmp_path / "a" / "run.json").read_text()))
    report.emit(back, tmp_path / "b")
    for n in ("histogram.csv", "run.json", "summary.json"):
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_summary_roundtrip(tmp_path):
    r = small_run()
    report.emit(r, tmp_path)
    assert report.read_summary(tmp_path / "summary.json") == r.summary


def test_matrix_emit(tmp_path):
    files = report.emit([small_run(0), small_run(1)], tmp_path)
    lines = files[0].read_text().splitlines()
    assert lines[0] == "network,format,policy,mean_abs_dev,pct_worst_bin,pct_best_bin"
    assert len(lines) == 3 and lines[1].startswith("uniform,int8-symmetric,trbg(bias=0.7,bal),")
    assert len(json.loads(files[1].read_text())) == 2


def test_emit_unknown_type(tmp_path):
    with pytest.raises(TypeError):
        report.emit(object(), tmp_path)


def test_write_error_surfaced(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(report.ReportError):
        report.write_atomic(blocker / "sub" / "out.csv", "data")


def test_atomic_write_leaves_no_temp(tmp_path):
    report.write_atomic(tmp_path / "x.csv", "a\n")
    report.write_atomic(tmp_path / "x.csv", "b\n")
    assert os.listdir(tmp_path) == ["x.csv"]
    assert (tmp_path / "x.csv").read_text() == "b\n"


def test_fmt():
    assert report.fmt(0.1) == "0.1"
    assert report.fmt(np.float64(1 / 3)) == repr(1 / 3)
    assert report.fmt(np.int64(7)) == "7"
    assert report.fmt(None) == ""
