"""Per-bit-position statistics of weight words (bit 0 = LSB)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BitDistribution:
    word_width: int
    counts: tuple[int, ...]  # words with bit i set
    n_words: int

    @property
    def p_one(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.n_words

    def merge(self, other: "BitDistribution") -> "BitDistribution":
        if other.word_width != self.word_width:
            raise ValueError("cannot merge distributions of different word widths")
        counts = tuple(a + b for a, b in zip(self.counts, other.counts))
        return BitDistribution(self.word_width, counts, self.n_words + other.n_words)


def bit_counts(words, width: int) -> np.ndarray:
    """Number of words with each bit set, as int64 of length `width`."""
    dtype = {8: "u1", 32: "<u4"}[width]
    as_bytes = np.ascontiguousarray(words).astype(dtype, copy=False).view(np.uint8)
    bits = np.unpackbits(as_bytes.reshape(-1, width // 8), axis=1, bitorder="little")
    return bits.sum(axis=0, dtype=np.int64)


def bit_distribution(words, width: int) -> BitDistribution:
    if width not in (8, 32):
        raise ValueError(f"word width must be 8 or 32, got {width}")
    words = np.asarray(words)
    if words.size == 0:
        raise ValueError("bit_distribution needs at least one word")
    return BitDistribution(width, tuple(int(c) for c in bit_counts(words.ravel(), width)),
                           int(words.size))


def network_distribution(layer_words, width: int) -> BitDistribution:
    """Distribution over all layers' words of a network."""
    dists = [bit_distribution(w, width) for w in layer_words]
    total = dists[0]
    for d in dists[1:]:
        total = total.merge(d)
    return total


def mean_rho(dist: BitDistribution) -> float:
    return float(np.mean(dist.p_one))
