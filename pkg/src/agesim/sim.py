"""End-to-end aging experiments.

A `RunConfig` names a word source (a network to quantize, or synthetic
uniform-random words), an accelerator, an encoding policy and an inference
count; `run` turns it into a duty-cycle map and an SNM histogram.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from agesim import __version__
from agesim.aging import DutyCycleMap, SnmHistogram, SnmModel, accumulate, histogram, snm_of
from agesim.dataflow import (AcceleratorConfig, AcceleratorKind, BlockInfo, Partition,
                             baseline_config, build_write_stream, partition_blocks, tpu_like_config)
from agesim.encoders import EncodingPolicy, PeriodUnit, Policy
from agesim.probmodel import p_duty_deviation
from agesim.weights import (ZOO, Format, NetworkSpec, fit_quantization, load_network,
                            quantize_to_words, synthesize_network)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    # word source: "zoo" (synthesized weights for a named shape), "manifest", or "uniform"
    source: str = "zoo"
    network: str = "custom_mnist"
    distribution: tuple = ("gaussian", 0.0, 0.05)
    weight_seed: int = 0
    uniform_rho: float = 0.5
    uniform_blocks: int = 20
    format: Format = Format.INT8_SYM
    accelerator: AcceleratorKind = AcceleratorKind.TPU_LIKE
    memory_kb: int | None = None  # default: 512 baseline, 256 TPU-like
    f: int | None = None  # default: 8 baseline, 256 TPU-like
    n: int = 8
    fifo_tiles: int | None = None
    policy: EncodingPolicy = EncodingPolicy()
    inferences: int = 100
    seed: int = 0
    bins: int = 32
    snm_table: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "format", Format(self.format))
        object.__setattr__(self, "accelerator", AcceleratorKind(self.accelerator))
        object.__setattr__(self, "distribution", tuple(self.distribution))
        if self.source not in ("zoo", "manifest", "uniform"):
            raise ValueError(f"unknown word source {self.source!r}")
        if int(self.inferences) != self.inferences or self.inferences < 1:
            raise ValueError(f"inferences must be an integer >= 1, got {self.inferences}")
        if self.source == "zoo" and self.network not in ZOO:
            raise ValueError(f"unknown zoo network {self.network!r}; known: {sorted(ZOO)}")

    def accelerator_config(self) -> AcceleratorConfig:
        bpw = self.format.bits
        if self.accelerator is AcceleratorKind.BASELINE:
            return baseline_config((self.memory_kb or 512) * 1024, self.f or 8, self.n, bpw)
        return tpu_like_config((self.memory_kb or 256) * 1024, self.f or 256, bpw, self.fifo_tiles)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["format"] = self.format.value
        d["accelerator"] = self.accelerator.value
        d["distribution"] = list(self.distribution)
        d["policy"] = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(self.policy).items()}
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def label(self) -> str:
        return f"{self.network if self.source != 'uniform' else 'uniform'}/{self.format.value}/{self.policy.label()}"


@dataclass
class RunResult:
    config: RunConfig
    k_inf: int
    total_k: int
    summary: dict
    histogram: SnmHistogram
    padding_fraction: float
    ones_histogram: list[int] | None = None
    wall_time: float = 0.0
    dmap: DutyCycleMap | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        """Deterministic serialization (no wall-time, no raw map)."""
        return {
            "tool_version": __version__,
            "config_hash": self.config.config_hash(),
            "config": self.config.to_dict(),
            "k_inf": self.k_inf,
            "total_k": self.total_k,
            "padding_fraction": self.padding_fraction,
            "summary": self.summary,
            "histogram": self.histogram.to_dict(),
            "ones_histogram": self.ones_histogram,
        }

    @classmethod
    def from_dict(cls, doc) -> "RunResult":
        cfg = config_from_dict(doc["config"])
        return cls(cfg, doc["k_inf"], doc["total_k"], doc["summary"],
                   SnmHistogram.from_dict(doc["histogram"]), doc["padding_fraction"],
                   doc.get("ones_histogram"))

    @property
    def pct_best_bin(self) -> float:
        return float(self.histogram.pct[0])

    @property
    def pct_worst_bin(self) -> float:
        return float(self.histogram.pct[-1])


def config_from_dict(d: dict) -> RunConfig:
    d = dict(d)
    d["policy"] = EncodingPolicy(**d.get("policy", {}))
    return RunConfig(**d)


def resolve_network(cfg: RunConfig) -> NetworkSpec:
    if cfg.source == "manifest":
        return load_network(cfg.network)
    return synthesize_network(ZOO[cfg.network], cfg.distribution, cfg.weight_seed, name=cfg.network)


def uniform_partition(accel: AcceleratorConfig, rho: float, blocks: int, seed: int) -> Partition:
    """`blocks` blocks of i.i.d. bits, each '1' with probability `rho`."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if blocks < 1:
        raise ValueError("need at least one block")
    rng = np.random.default_rng(seed)
    rows, width = accel.rows_per_block, accel.geometry.word_bits
    out, info = [], []
    for i in range(blocks):
        bits = (rng.random((rows, width)) < rho).astype(np.uint8)
        out.append(np.packbits(bits, axis=1, bitorder="little"))
        info.append(BlockInfo(i, -1, 0, 0, 0, 0, 0))
    return Partition(out, info, accel)


def build_partition(cfg: RunConfig) -> Partition:
    accel = cfg.accelerator_config()
    if cfg.source == "uniform":
        return uniform_partition(accel, cfg.uniform_rho, cfg.uniform_blocks, cfg.weight_seed)
    net = resolve_network(cfg)
    scheme = fit_quantization(net, cfg.format)
    return partition_blocks(net.layers, quantize_to_words(net, scheme), accel)


def run(cfg: RunConfig) -> RunResult:
    t0 = time.perf_counter()
    partition = build_partition(cfg)
    accel = partition.config
    stream = build_write_stream(partition, cfg.inferences)
    policy = replace(cfg.policy, seed=cfg.seed)
    dmap = accumulate(stream, policy, accel.geometry)
    model = SnmModel.from_csv(cfg.snm_table) if cfg.snm_table else SnmModel()
    hist = histogram(snm_of(dmap, model), cfg.bins, model.best, model.worst)
    result = RunResult(
        config=cfg,
        k_inf=partition.k_inf,
        total_k=int(dmap.total.max()),
        summary=dmap.summary(),
        histogram=hist,
        padding_fraction=partition.padding_fraction,
        ones_histogram=dmap.ones_histogram(),
        dmap=dmap,
    )
    result.wall_time = time.perf_counter() - t0
    log.info("%s: K_inf=%d K=%d mean|d-0.5|=%.4f (%.2fs)", cfg.label(), result.k_inf,
             result.total_k, result.summary["mean_abs_dev"], result.wall_time)
    return result


@dataclass
class RunFailure:
    config: RunConfig
    error: str


def _run_safe(cfg):
    try:
        return run(cfg)
    except Exception as exc:  # reported per entry, siblings keep running
        return RunFailure(cfg, f"{type(exc).__name__}: {exc}")


def run_matrix(configs, workers: int = 1) -> list:
    """Run independent configs; failures come back as `RunFailure` entries."""
    configs = list(configs)
    if not configs:
        raise ValueError("run_matrix needs at least one config")
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_safe, configs))
    else:
        results = [_run_safe(c) for c in configs]
    for r in results:
        if isinstance(r, RunResult):
            r.dmap = None
    return results


def matrix_rows(results) -> list[dict]:
    rows = []
    for r in results:
        cfg = r.config
        row = {
            "network": cfg.network if cfg.source != "uniform" else "uniform",
            "format": cfg.format.value,
            "policy": cfg.policy.label(),
        }
        if isinstance(r, RunFailure):
            row.update(mean_abs_dev=None, pct_worst_bin=None, pct_best_bin=None, error=r.error)
        else:
            row.update(mean_abs_dev=r.summary["mean_abs_dev"], pct_worst_bin=r.pct_worst_bin,
                       pct_best_bin=r.pct_best_bin, error=None)
        rows.append(row)
    return rows


def compare_to_model(result: RunResult, K: int, rho: float) -> dict:
    """Empirical deviation fractions vs the binomial model, one entry per b.

    The check is meaningful for NONE/TRBG runs on uniform synthetic words with
    unit dwell; anything else is flagged in ``warnings`` but still compared.
    """
    warnings = []
    cfg = result.config
    if cfg.source != "uniform":
        warnings.append("word source is not uniform-random; model independence assumption violated")
    if cfg.policy.kind not in (Policy.NONE, Policy.TRBG):
        warnings.append(f"policy {cfg.policy.kind.value} correlates successive writes")
    hist = result.ones_histogram
    if hist is None:
        raise ValueError("result has non-uniform dwell totals; no ones-count histogram")
    T = len(hist) - 1
    if T != K:
        warnings.append(f"cells saw {T} mappings, model asked for K={K}")
    h = np.asarray(hist, dtype=np.int64)
    cells = int(h.sum())
    cum = np.cumsum(h)
    rows = []
    for b in range(K // 2 + 1):
        bt = math.floor(b * T / K)
        low = cum[bt]
        high = cells - (cum[T - bt - 1] if T - bt - 1 >= 0 else 0)
        hits = cells if bt >= T - bt else low + high
        emp = hits / cells
        p = p_duty_deviation(K, rho, b)
        sigma = math.sqrt(p * (1 - p) / cells)
        ok = abs(emp - p) <= 3 * sigma if sigma > 0 else emp == p
        rows.append({"b": b, "b_over_K": b / K, "empirical": emp, "predicted": p,
                     "sigma": sigma, "within_3sigma": bool(ok)})
    return {"K": K, "rho": rho, "cells": cells, "rows": rows, "warnings": warnings,
            "all_within_3sigma": all(r["within_3sigma"] for r in rows)}


# --- run-config files (INI) -------------------------------------------------

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def parse_config(path) -> RunConfig:
    """Read a run-config INI file.

    Sections and keys (all optional)::

        [network]      source, name, manifest, distribution, mean, std, lo, hi,
                       seed, rho, blocks
        [quant]        format
        [accelerator]  kind, memory_kb, f, n, fifo_tiles
        [policy]       policy, seed, barrel.max_shift, trbg.bias, trbg.m,
                       trbg.balancing, trbg.period_unit
        [run]          inferences, bins, snm_table, out_dir
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read(path)

    def get(section, key, conv=str, default=None):
        if cp.has_option(section, key):
            return conv(cp.get(section, key).strip())
        return default

    def as_bool(text):
        try:
            return _BOOL[text.lower()]
        except KeyError:
            raise ValueError(f"not a boolean: {text!r}") from None

    kw = {}
    source = get("network", "source", default="zoo")
    kw["source"] = source
    if source == "manifest":
        manifest = Path(get("network", "manifest"))
        kw["network"] = str(manifest if manifest.is_absolute() else path.parent / manifest)
    else:
        kw["network"] = get("network", "name", default="custom_mnist")
    dist = get("network", "distribution", default="gaussian")
    if dist == "gaussian":
        kw["distribution"] = ("gaussian", get("network", "mean", float, 0.0), get("network", "std", float, 0.05))
    else:
        kw["distribution"] = (dist, get("network", "lo", float, -1.0), get("network", "hi", float, 1.0))
    kw["weight_seed"] = get("network", "seed", int, 0)
    kw["uniform_rho"] = get("network", "rho", float, 0.5)
    kw["uniform_blocks"] = get("network", "blocks", int, 20)
    kw["format"] = Format.parse(get("quant", "format", default="int8-symmetric"))
    kw["accelerator"] = AcceleratorKind(get("accelerator", "kind", default="tpu-like"))
    kw["memory_kb"] = get("accelerator", "memory_kb", int)
    kw["f"] = get("accelerator", "f", int)
    kw["n"] = get("accelerator", "n", int, 8)
    kw["fifo_tiles"] = get("accelerator", "fifo_tiles", int)
    kw["policy"] = EncodingPolicy(
        kind=Policy(get("policy", "policy", default="none")),
        max_shift=get("policy", "barrel.max_shift", int, 7),
        bias=get("policy", "trbg.bias", float, 0.5),
        m=get("policy", "trbg.m", int, 4),
        balancing=get("policy", "trbg.balancing", as_bool, True),
        period_unit=PeriodUnit(get("policy", "trbg.period_unit", default="block")),
    )
    kw["seed"] = get("policy", "seed", int, 0)
    kw["inferences"] = get("run", "inferences", int, 100)
    kw["bins"] = get("run", "bins", int, 32)
    table = get("run", "snm_table")
    if table is not None and not Path(table).is_absolute():
        table = str(path.parent / table)
    kw["snm_table"] = table
    kw["out_dir"] = get("run", "out_dir")
    return RunConfig(**kw)
