"""Stable CSV/JSON serialization of results.

CSV schemas (column order is fixed):

    histogram.csv  bin_lo, bin_hi, count, pct
    bits.csv       bit_index, p_one            (or one p_one column per label)
    curve.csv      b, b_over_K, P
    matrix.csv     network, format, policy, mean_abs_dev, pct_worst_bin, pct_best_bin

Floats are written as the shortest decimal that round-trips, so re-emitting
the same data gives identical bytes.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from agesim.bitstats import BitDistribution
from agesim.sim import RunFailure, RunResult, matrix_rows


class ReportError(OSError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_atomic(path, data) -> Path:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path


def histogram_csv(hist) -> str:
    return _csv_text(["bin_lo", "bin_hi", "count", "pct"], hist.rows())


def bits_csv(dists) -> str:
    """One distribution, or a {label: distribution} mapping (one column each)."""
    if isinstance(dists, BitDistribution):
        return _csv_text(["bit_index", "p_one"], enumerate(dists.p_one))
    labels = list(dists)
    width = {dists[k].word_width for k in labels}
    cols = [dists[k].p_one for k in labels]
    n = max(width)
    rows = [[i] + [c[i] if i < len(c) else None for c in cols] for i in range(n)]
    return _csv_text(["bit_index"] + labels, rows)


def curve_csv(curve) -> str:
    curve = np.asarray(curve)
    return _csv_text(["b", "b_over_K", "P"], ((int(b), bk, p) for b, bk, p in curve))


def matrix_csv(results) -> str:
    cols = ["network", "format", "policy", "mean_abs_dev", "pct_worst_bin", "pct_best_bin"]
    return _csv_text(cols, ([r[c] for c in cols] for r in matrix_rows(results)))


def emit(obj, out_dir, raw_map: bool = False) -> list[Path]:
    """Write `obj` into `out_dir`; returns the files written.

    Accepts a RunResult, a BitDistribution (or {label: BitDistribution}), a
    deviation curve array of (b, b/K, P) rows, or a list of run results.
    """
    out = Path(out_dir)
    written = []
    if isinstance(obj, RunResult):
        doc = obj.to_dict()
        written.append(write_atomic(out / "histogram.csv", histogram_csv(obj.histogram)))
        written.append(write_atomic(out / "summary.json", _json_text(obj.summary)))
        written.append(write_atomic(out / "run.json", _json_text(doc)))
        if raw_map and obj.dmap is not None:
            written.append(write_atomic(out / "dutycycle.bin", obj.dmap.to_bytes()))
    elif isinstance(obj, BitDistribution) or (isinstance(obj, dict) and obj
                                              and all(isinstance(v, BitDistribution) for v in obj.values())):
        written.append(write_atomic(out / "bits.csv", bits_csv(obj)))
    elif isinstance(obj, np.ndarray) and obj.ndim == 2 and obj.shape[1] == 3:
        written.append(write_atomic(out / "curve.csv", curve_csv(obj)))
    elif isinstance(obj, (list, tuple)) and obj and all(isinstance(r, (RunResult, RunFailure)) for r in obj):
        written.append(write_atomic(out / "matrix.csv", matrix_csv(obj)))
        written.append(write_atomic(out / "matrix.json", _json_text(matrix_rows(obj))))
    else:
        raise TypeError(f"don't know how to emit {type(obj).__name__}")
    return written


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())
