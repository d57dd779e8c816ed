"""Weight-memory geometry, block tiling and the per-inference write stream.

Filters of a layer are grouped into sets of `f` (FC neurons count as filters
with `in` elements). Each set is cut along its flattened per-filter axis
(channel-major, then row, then col) into chunks of ``block_weights // f``
elements. One chunk of every filter of the set forms a block; a memory word
holds ``N`` consecutive chunk elements of each of the ``f`` filters, filter
major, so one word is one cycle's worth of co-scheduled weights. Blocks are
emitted set by set, chunk by chunk. Short sets and short chunks are padded
with all-zero weights.

Words are stored as packed little-endian bytes: bit ``i`` of a word lives in
byte ``i // 8``, bit ``i % 8``. A block is a ``(rows, word_bits // 8)`` uint8
array.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np


class AcceleratorKind(str, enum.Enum):
    BASELINE = "baseline"
    TPU_LIKE = "tpu-like"


@dataclass(frozen=True)
class MemoryGeometry:
    total_bits: int
    word_bits: int

    def __post_init__(self):
        if self.word_bits < 8 or self.word_bits % 8:
            raise ValueError(f"word_bits must be a positive multiple of 8, got {self.word_bits}")
        if self.total_bits < self.word_bits or self.total_bits % self.word_bits:
            raise ValueError(f"word_bits ({self.word_bits}) must divide total_bits ({self.total_bits})")

    @property
    def rows(self) -> int:
        return self.total_bits // self.word_bits

    @property
    def cells(self) -> int:
        return self.total_bits

    @property
    def word_bytes(self) -> int:
        return self.word_bits // 8


@dataclass(frozen=True)
class AcceleratorConfig:
    kind: AcceleratorKind
    f: int
    n: int  # weights per filter in one word (multipliers per PE)
    bits_per_weight: int
    geometry: MemoryGeometry
    fifo_tiles: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", AcceleratorKind(self.kind))
        if self.f < 1 or self.n < 1:
            raise ValueError("f and n must be >= 1")
        if self.bits_per_weight not in (8, 32):
            raise ValueError(f"bits_per_weight must be 8 or 32, got {self.bits_per_weight}")
        if self.geometry.word_bits != self.f * self.n * self.bits_per_weight:
            raise ValueError("word_bits must equal f * n * bits_per_weight")
        if self.fifo_tiles < 1:
            raise ValueError("fifo_tiles must be >= 1")
        if self.kind is AcceleratorKind.BASELINE and self.fifo_tiles != 1:
            raise ValueError("the baseline accelerator has a single block slot")
        if self.geometry.rows % self.fifo_tiles:
            raise ValueError("memory rows must split evenly into FIFO tile slots")

    @property
    def rows_per_block(self) -> int:
        return self.geometry.rows // self.fifo_tiles

    @property
    def block_weights(self) -> int:
        return self.rows_per_block * self.f * self.n

    @property
    def chunk(self) -> int:
        """Elements of each filter held by one block."""
        return self.rows_per_block * self.n


def baseline_config(memory_bytes=512 * 1024, f=8, n=8, bits_per_weight=8) -> AcceleratorConfig:
    """Baseline accelerator: f PEs of n multipliers, one block fills the memory."""
    geom = MemoryGeometry(memory_bytes * 8, f * n * bits_per_weight)
    return AcceleratorConfig(AcceleratorKind.BASELINE, f, n, bits_per_weight, geom, 1)


def tpu_like_config(memory_bytes=256 * 1024, f=256, bits_per_weight=8, fifo_tiles=None) -> AcceleratorConfig:
    """TPU-like NPU: an f x f systolic array fed by a circular weight FIFO.

    One tile holds f x f weights, one memory word is one tile row of f weights.
    `fifo_tiles` defaults to however many tiles fit in the memory.
    """
    tile_bits = f * f * bits_per_weight
    if fifo_tiles is None:
        fifo_tiles = (memory_bytes * 8) // tile_bits
        if fifo_tiles < 1:
            raise ValueError(f"{memory_bytes} bytes cannot hold one {f}x{f} tile")
    if fifo_tiles * tile_bits != memory_bytes * 8:
        raise ValueError("memory size must equal fifo_tiles * tile size")
    geom = MemoryGeometry(memory_bytes * 8, f * bits_per_weight)
    return AcceleratorConfig(AcceleratorKind.TPU_LIKE, f, 1, bits_per_weight, geom, fifo_tiles)


@dataclass(frozen=True)
class BlockInfo:
    block: int
    layer: int
    filter_set: int
    elem_start: int
    elem_stop: int  # exclusive, clipped to the real per-filter length
    filters: int  # real (non-padding) filters in the set
    padding: int  # padded weight slots in the block


@dataclass
class Partition:
    blocks: list[np.ndarray] = field(repr=False)
    info: list[BlockInfo]
    config: AcceleratorConfig

    @property
    def k_inf(self) -> int:
        return len(self.blocks)

    @property
    def padding_fraction(self) -> float:
        return sum(b.padding for b in self.info) / (self.k_inf * self.config.block_weights)

    def write_block_map(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["block", "layer", "filter_set", "elem_start", "elem_stop", "filters", "padding"])
            for b in self.info:
                w.writerow([b.block, b.layer, b.filter_set, b.elem_start, b.elem_stop, b.filters, b.padding])


def _word_dtype(bits_per_weight):
    return np.dtype("u1") if bits_per_weight == 8 else np.dtype("<u4")


def partition_blocks(layers, layer_words, config: AcceleratorConfig) -> Partition:
    """Tile every layer's words into memory blocks in traversal order."""
    f, n, rows = config.f, config.n, config.rows_per_block
    chunk = config.chunk
    dtype = _word_dtype(config.bits_per_weight)
    blocks, info = [], []
    for li, (layer, words) in enumerate(zip(layers, layer_words)):
        if layer.filters < 1:
            raise ValueError(f"layer {li} has no filters")
        words = np.asarray(words).astype(dtype, copy=False)
        if words.size != layer.size:
            raise ValueError(f"layer {li}: {words.size} words for {layer.size} weights")
        F, E = layer.filters, layer.per_filter
        sets, chunks = math.ceil(F / f), math.ceil(E / chunk)
        padded = np.zeros((sets * f, chunks * chunk), dtype=dtype)
        padded[:F, :E] = words.reshape(F, E)
        # (set, filter, chunk, row, n) -> (set, chunk, row, filter, n)
        tiled = padded.reshape(sets, f, chunks, rows, n).transpose(0, 2, 3, 1, 4)
        for s in range(sets):
            real_f = min(f, F - s * f)
            for c in range(chunks):
                stop = min((c + 1) * chunk, E)
                block = np.ascontiguousarray(tiled[s, c]).reshape(rows, f * n)
                blocks.append(block.view(np.uint8).reshape(rows, -1))
                info.append(BlockInfo(len(info), li, s, c * chunk, stop, real_f,
                                      config.block_weights - real_f * (stop - c * chunk)))
    return Partition(blocks, info, config)


def unpartition(partition: Partition, layers) -> list[np.ndarray]:
    """Invert `partition_blocks`: recover each layer's flat word array."""
    cfg = partition.config
    dtype = _word_dtype(cfg.bits_per_weight)
    out = [np.zeros(layer.size, dtype=dtype) for layer in layers]
    for blk, bi in zip(partition.blocks, partition.info):
        layer = layers[bi.layer]
        w = blk.view(dtype).reshape(cfg.rows_per_block, cfg.f, cfg.n).transpose(1, 0, 2)
        w = w.reshape(cfg.f, cfg.chunk)[:bi.filters, :bi.elem_stop - bi.elem_start]
        dest = out[bi.layer].reshape(layer.filters, layer.per_filter)
        f0 = bi.filter_set * cfg.f
        dest[f0:f0 + bi.filters, bi.elem_start:bi.elem_stop] = w
    return out


class WriteEvent(NamedTuple):
    row: int
    word: bytes
    dwell_units: int


@dataclass
class WriteStream:
    """Ordered block writes; every write covers all rows of one block slot.

    `schedule` has one entry per block write: (block index, base row, dwell).
    Individual row events are produced lazily by `events()`.
    """

    blocks: list[np.ndarray] = field(repr=False)
    schedule: np.ndarray = field(repr=False)
    k_inf: int
    inferences: int
    rows_per_block: int
    fifo_tiles: int

    def __len__(self):
        return len(self.schedule)

    def block_writes(self) -> Iterator[tuple[int, int, int]]:
        for blk, base, dwell in self.schedule:
            yield int(blk), int(base), int(dwell)

    def events(self) -> Iterator[WriteEvent]:
        for blk, base, dwell in self.block_writes():
            data = self.blocks[blk]
            for r in range(self.rows_per_block):
                yield WriteEvent(base + r, data[r].tobytes(), dwell)

    def inference(self, i: int) -> "WriteStream":
        """The sub-stream of inference `i` alone."""
        sl = self.schedule[i * self.k_inf:(i + 1) * self.k_inf]
        return WriteStream(self.blocks, sl, self.k_inf, 1, self.rows_per_block, self.fifo_tiles)


def build_write_stream(partition: Partition, inferences: int, dwell=None) -> WriteStream:
    """Repeat the block sequence once per inference.

    Baseline: each block overwrites the whole memory. TPU-like: tile ``t`` of
    the stream goes to FIFO slot ``t mod fifo_tiles``. `dwell` optionally
    gives a per-block dwell weight (defaults to 1 for every block).
    """
    if int(inferences) != inferences or inferences < 1:
        raise ValueError(f"inferences must be an integer >= 1, got {inferences}")
    cfg = partition.config
    k = partition.k_inf
    if k == 0:
        raise ValueError("partition has no blocks")
    dwell = np.ones(k, dtype=np.int64) if dwell is None else np.asarray(dwell, dtype=np.int64)
    if dwell.shape != (k,) or (dwell < 1).any():
        raise ValueError("dwell must hold one positive integer per block")
    t = np.arange(k * inferences, dtype=np.int64)
    blk = t % k
    base = (t % cfg.fifo_tiles) * cfg.rows_per_block
    schedule = np.stack([blk, base, dwell[blk]], axis=1)
    return WriteStream(partition.blocks, schedule, k, int(inferences), cfg.rows_per_block, cfg.fifo_tiles)


def fifo_slot_tiles(n_tiles: int, fifo_tiles: int, slot: int) -> list[int]:
    """Stream tile indices that land in FIFO `slot`."""
    return [t for t in range(n_tiles) if t % fifo_tiles == slot]
