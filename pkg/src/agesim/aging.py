"""Per-cell duty-cycle accumulation and SNM degradation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from agesim.dataflow import MemoryGeometry, WriteStream
from agesim.encoders import Encoder, EncodingPolicy, Policy

COUNTER_MAX = 2**32 - 1

SNM_BEST = 10.82  # % degradation after 7 years at 50% duty-cycle
SNM_WORST = 26.12  # % degradation after 7 years at 0% / 100% duty-cycle


@dataclass
class DutyCycleMap:
    """Exact per-cell counters. `ones` is (rows, word_bits); `total` is per row.

    Every cell of a row is written together, so the total dwell is kept once
    per row and broadcast on demand.
    """

    ones: np.ndarray = field(repr=False)
    total: np.ndarray = field(repr=False)

    @property
    def cells(self) -> int:
        return self.ones.size

    def total_per_cell(self) -> np.ndarray:
        return np.broadcast_to(self.total[:, None], self.ones.shape)

    def duty_cycle(self) -> np.ndarray:
        if (self.total == 0).any():
            raise ValueError("some rows were never written; duty-cycle undefined")
        return self.ones / self.total[:, None].astype(np.float64)

    def uniform_total(self) -> int | None:
        t = np.unique(self.total)
        return int(t[0]) if t.size == 1 else None

    def ones_histogram(self) -> list[int] | None:
        """Cell counts per ones-count value, when every cell has the same total."""
        t = self.uniform_total()
        if t is None:
            return None
        return np.bincount(self.ones.ravel(), minlength=t + 1).tolist()

    def summary(self) -> dict:
        d = self.duty_cycle()
        dev = np.abs(d - 0.5)
        return {
            "cells": int(self.cells),
            "total_dwell_min": int(self.total.min()),
            "total_dwell_max": int(self.total.max()),
            "mean": float(d.mean()),
            "min": float(d.min()),
            "max": float(d.max()),
            "mean_abs_dev": float(dev.mean()),
            "frac_within_0.05": float(np.mean(dev <= 0.05)),
        }

    def to_bytes(self) -> bytes:
        """Raw little-endian uint32 (ones, total) pairs, row-major over cells."""
        pairs = np.empty(self.ones.shape + (2,), dtype="<u4")
        pairs[..., 0] = self.ones
        pairs[..., 1] = self.total_per_cell()
        return pairs.tobytes()

    def dump(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path, word_bits: int) -> "DutyCycleMap":
        pairs = np.frombuffer(Path(path).read_bytes(), dtype="<u4").reshape(-1, word_bits, 2)
        return cls(pairs[..., 0].astype(np.uint32), pairs[:, 0, 1].astype(np.int64))


def _period(stream: WriteStream, policy: EncodingPolicy) -> int:
    """Inferences after which a deterministic policy's stream state repeats."""
    fifo = stream.fifo_tiles
    p_fifo = fifo // math.gcd(stream.k_inf, fifo)
    writes_per_row = stream.k_inf * p_fifo // fifo
    modulus = {Policy.NONE: 1, Policy.INVERSION: 2, Policy.BARREL: policy.max_shift + 1}[policy.kind]
    return p_fifo * (modulus // math.gcd(writes_per_row, modulus))


def _replay(stream, writes, encoder, ones, total):
    for blk, base, dwell in writes:
        encoded, _ = encoder.encode_block(stream.blocks[blk], base)
        bits = np.unpackbits(encoded, axis=1, bitorder="little")
        stop = base + bits.shape[0]
        if dwell == 1:
            ones[base:stop] += bits
        else:
            ones[base:stop] += bits.astype(np.uint32) * np.uint32(dwell)
        total[base:stop] += dwell


def _check_overflow(stream: WriteStream, rows: int):
    per_row = np.zeros(rows, dtype=np.int64)
    np.add.at(per_row, stream.schedule[:, 1], stream.schedule[:, 2])
    if per_row.max() > COUNTER_MAX:
        raise OverflowError(f"dwell total {per_row.max()} exceeds 32-bit cell counters")


def accumulate(stream: WriteStream, policy: EncodingPolicy, geometry: MemoryGeometry,
               fast: bool = True) -> DutyCycleMap:
    """Replay `stream` through the policy's encoder and count stored '1's per cell.

    With `fast`, deterministic policies simulate one stream period and scale;
    the result is identical to the full replay.
    """
    rows, width = geometry.rows, geometry.word_bits
    if stream.blocks and stream.blocks[0].shape[1] * 8 != width:
        raise ValueError("block word width does not match the memory geometry")
    if len(stream.schedule) and (stream.schedule[:, 1].max() + stream.rows_per_block > rows):
        raise IndexError("write stream addresses rows outside the memory")
    _check_overflow(stream, rows)
    encoder = Encoder(policy, rows, width)
    ones = np.zeros((rows, width), dtype=np.uint32)
    total = np.zeros(rows, dtype=np.int64)
    writes = list(stream.block_writes())

    period = _period(stream, policy) if (fast and policy.deterministic) else None
    if period is None or stream.inferences <= period:
        _replay(stream, writes, encoder, ones, total)
        return DutyCycleMap(ones, total)

    q, r = divmod(stream.inferences, period)
    k = stream.k_inf
    _replay(stream, writes[:r * k], encoder, ones, total)
    head_ones, head_total = ones.copy(), total.copy()
    _replay(stream, writes[r * k:period * k], encoder, ones, total)
    ones = ones * np.uint32(q) + head_ones
    total = total * q + head_total
    return DutyCycleMap(ones, total)


@dataclass(frozen=True)
class SnmModel:
    """Duty-cycle to 7-year SNM degradation (%).

    Default: linear in the imbalance |2d - 1| between the two endpoints. A
    table of (duty_cycle, degradation) points replaces it when given.
    """

    best: float = SNM_BEST
    worst: float = SNM_WORST
    table_d: tuple[float, ...] | None = None
    table_deg: tuple[float, ...] | None = None

    def __call__(self, d):
        d = np.asarray(d, dtype=np.float64)
        if self.table_d is not None:
            deg = np.interp(d, self.table_d, self.table_deg)
        else:
            deg = self.best + (self.worst - self.best) * np.abs(2.0 * d - 1.0)
        return np.clip(deg, self.best, self.worst)

    @classmethod
    def from_csv(cls, path) -> "SnmModel":
        with open(path, newline="") as fh:
            rows = [(float(r["duty_cycle"]), float(r["degradation"])) for r in csv.DictReader(fh)]
        rows.sort()
        d, deg = zip(*rows)
        return cls(min(deg), max(deg), d, deg)


def snm_of(dmap: DutyCycleMap, model: SnmModel = SnmModel()) -> np.ndarray:
    return model(dmap.duty_cycle())


@dataclass
class SnmHistogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def cells(self) -> int:
        return int(self.counts.sum())

    @property
    def pct(self) -> np.ndarray:
        return 100.0 * self.counts / self.cells

    def rows(self):
        for lo, hi, c, p in zip(self.edges[:-1], self.edges[1:], self.counts, self.pct):
            yield float(lo), float(hi), int(c), float(p)

    def to_dict(self) -> dict:
        return {"edges": [float(e) for e in self.edges], "counts": [int(c) for c in self.counts]}

    @classmethod
    def from_dict(cls, doc) -> "SnmHistogram":
        return cls(np.asarray(doc["edges"], dtype=np.float64), np.asarray(doc["counts"], dtype=np.int64))


def histogram(degradations, bins=32, lo=SNM_BEST, hi=SNM_WORST) -> SnmHistogram:
    """Bin degradations into half-open bins over [lo, hi]; the last bin is closed.

    `bins` is a bin count (uniform edges, endpoints exactly lo and hi) or an
    explicit increasing edge sequence.
    """
    deg = np.asarray(degradations, dtype=np.float64).ravel()
    if deg.size == 0:
        raise ValueError("histogram of an empty degradation array")
    if np.ndim(bins) == 0:
        edges = np.linspace(lo, hi, int(bins) + 1)
        edges[0], edges[-1] = lo, hi
    else:
        edges = np.asarray(bins, dtype=np.float64)
    counts, _ = np.histogram(np.clip(deg, edges[0], edges[-1]), bins=edges)
    return SnmHistogram(edges, counts.astype(np.int64))


def write_summary(dmap: DutyCycleMap, path) -> None:
    Path(path).write_text(json.dumps(dmap.summary(), indent=2, sort_keys=True) + "\n")
