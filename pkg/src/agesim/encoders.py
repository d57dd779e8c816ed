"""Write-data encoders and their read-side decoders.

Four policies:

* ``none``      -- words are stored as-is.
* ``inversion`` -- every other write to a row is stored inverted.
* ``barrel``    -- the k-th write to a row is rotated left by ``k mod (max_shift+1)``.
* ``trbg``      -- a (possibly biased) random bit generator drives a 1-bit enable
                   that XOR-inverts the whole word; an M-bit counter optionally
                   toggles the generator output every 2**M ticks to cancel its bias.

Scalar words are Python ints of ``word_bits`` width. The block API works on
packed ``(rows, word_bits // 8)`` uint8 arrays (see `agesim.dataflow`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Policy(str, enum.Enum):
    NONE = "none"
    INVERSION = "inversion"
    BARREL = "barrel"
    TRBG = "trbg"


class PeriodUnit(str, enum.Enum):
    EMISSION = "emission"  # balance counter ticks on every generated enable bit
    BLOCK = "block"  # balance counter ticks once per block mapping


@dataclass(frozen=True)
class EncodingPolicy:
    kind: Policy = Policy.NONE
    max_shift: int = 7
    bias: float = 0.5
    m: int = 4
    balancing: bool = True
    seed: int = 0
    period_unit: PeriodUnit = PeriodUnit.BLOCK

    def __post_init__(self):
        object.__setattr__(self, "kind", Policy(self.kind))
        object.__setattr__(self, "period_unit", PeriodUnit(self.period_unit))
        if self.max_shift < 0:
            raise ValueError("max_shift must be >= 0")
        if not 0.0 <= self.bias <= 1.0:
            raise ValueError(f"TRBG bias must lie in [0, 1], got {self.bias}")
        if self.m < 1:
            raise ValueError("bias register width M must be >= 1")

    @property
    def deterministic(self) -> bool:
        return self.kind is not Policy.TRBG

    def label(self) -> str:
        if self.kind is Policy.TRBG:
            bal = "bal" if self.balancing else "nobal"
            return f"trbg(bias={self.bias:g},{bal})"
        if self.kind is Policy.BARREL:
            return f"barrel(max_shift={self.max_shift})"
        return self.kind.value


@dataclass(frozen=True)
class Metadata:
    """Control record of one write: enable bit, rotate amount, or nothing."""

    kind: Policy
    value: int | None = None


class MissingMetadataError(KeyError):
    pass


class MetadataLog:
    """Metadata records keyed by (write sequence index, row)."""

    def __init__(self):
        self._records = {}

    def record(self, seq: int, row: int, meta: Metadata) -> None:
        self._records[seq, row] = meta

    def lookup(self, seq: int, row: int) -> Metadata:
        try:
            return self._records[seq, row]
        except KeyError:
            raise MissingMetadataError(f"no metadata for write {seq}, row {row}") from None

    def __len__(self):
        return len(self._records)


class TrbgState:
    """Seeded stand-in for the hardware TRBG plus the M-bit bias-balancing counter."""

    def __init__(self, bias=0.5, m=4, balancing=True, seed=0, period_unit=PeriodUnit.BLOCK):
        self.bias = float(bias)
        self.m = int(m)
        self.balancing = bool(balancing)
        self.period_unit = PeriodUnit(period_unit)
        self.rng = np.random.default_rng(seed)
        self.counter = 0
        self.flag = 0

    @property
    def period(self) -> int:
        return 1 << self.m

    def tick(self, times: int = 1) -> None:
        wraps = (self.counter + times) // self.period
        self.counter = (self.counter + times) % self.period
        if self.balancing:
            self.flag ^= wraps & 1

    def draw(self, n: int) -> np.ndarray:
        """Enable bits for the next `n` emissions, as uint8."""
        raw = (self.rng.random(n) < self.bias).astype(np.uint8)
        if self.period_unit is PeriodUnit.EMISSION:
            if self.balancing:
                toggles = (self.counter + np.arange(n)) // self.period
                raw ^= (self.flag ^ (toggles & 1)).astype(np.uint8)
            self.tick(n)
        else:
            raw ^= np.uint8(self.flag)
        return raw

    def end_block(self) -> None:
        if self.period_unit is PeriodUnit.BLOCK:
            self.tick()


def advance_trbg(state: TrbgState) -> int:
    """Emit one enable bit: raw generator bit XOR the balance flag."""
    return int(state.draw(1)[0])


def rotl(word: int, s: int, width: int) -> int:
    s %= width
    mask = (1 << width) - 1
    return ((word << s) | (word >> (width - s))) & mask


def rotr(word: int, s: int, width: int) -> int:
    return rotl(word, width - (s % width), width)


def decode(encoded: int, meta: Metadata, width: int) -> int:
    if meta is None:
        raise MissingMetadataError("decode needs the metadata written with the word")
    if meta.kind in (Policy.INVERSION, Policy.TRBG):
        return encoded ^ ((1 << width) - 1) if meta.value else encoded
    if meta.kind is Policy.BARREL:
        return rotr(encoded, meta.value, width)
    return encoded


def _roll_bits(rows: np.ndarray, s: int) -> np.ndarray:
    bits = np.unpackbits(rows, axis=1, bitorder="little")
    return np.packbits(np.roll(bits, s, axis=1), axis=1, bitorder="little")


class Encoder:
    """Stateful write-data encoder for one memory of `rows` x `word_bits`.

    A single instance owns the per-row write counters and the TRBG, so writes
    must be presented in stream order.
    """

    def __init__(self, policy: EncodingPolicy, rows: int, word_bits: int):
        if policy.kind is Policy.BARREL and policy.max_shift >= word_bits:
            raise ValueError(f"max_shift {policy.max_shift} must be < word width {word_bits}")
        self.policy = policy
        self.rows = rows
        self.word_bits = word_bits
        self.writes = np.zeros(rows, dtype=np.int64)
        self.trbg = None
        if policy.kind is Policy.TRBG:
            self.trbg = TrbgState(policy.bias, policy.m, policy.balancing, policy.seed, policy.period_unit)

    def _check_row(self, row):
        if not 0 <= row < self.rows:
            raise IndexError(f"row {row} outside memory of {self.rows} rows")

    def encode(self, word: int, row: int) -> tuple[int, Metadata]:
        self._check_row(row)
        kind = self.policy.kind
        count = int(self.writes[row])
        self.writes[row] += 1
        width = self.word_bits
        if kind is Policy.NONE:
            return word, Metadata(kind)
        if kind is Policy.INVERSION:
            e = count & 1
        elif kind is Policy.BARREL:
            s = count % (self.policy.max_shift + 1)
            return rotl(word, s, width), Metadata(kind, s)
        else:
            e = advance_trbg(self.trbg)
        return (word ^ ((1 << width) - 1) if e else word), Metadata(kind, e)

    def decode(self, encoded: int, meta: Metadata) -> int:
        return decode(encoded, meta, self.word_bits)

    def end_block(self) -> None:
        if self.trbg is not None:
            self.trbg.end_block()

    def encode_block(self, block: np.ndarray, base_row: int) -> tuple[np.ndarray, np.ndarray]:
        """Encode one full block write starting at `base_row`.

        Returns the encoded block and per-row metadata values (enable bit or
        shift; zeros for ``none``). Equivalent to calling `encode` on every row
        in order followed by `end_block`.
        """
        n = block.shape[0]
        self._check_row(base_row)
        self._check_row(base_row + n - 1)
        counts = self.writes[base_row:base_row + n].copy()
        self.writes[base_row:base_row + n] += 1
        kind = self.policy.kind
        if kind is Policy.NONE:
            return block, np.zeros(n, dtype=np.int64)
        if kind is Policy.BARREL:
            shifts = counts % (self.policy.max_shift + 1)
            out = block.copy()
            for s in np.unique(shifts):
                if s:
                    sel = shifts == s
                    out[sel] = _roll_bits(block[sel], int(s))
            return out, shifts
        if kind is Policy.INVERSION:
            e = (counts & 1).astype(np.uint8)
        else:
            e = self.trbg.draw(n)
            self.trbg.end_block()
        return block ^ (e * np.uint8(0xFF))[:, None], e.astype(np.int64)


def decode_block(encoded: np.ndarray, meta: np.ndarray, policy: EncodingPolicy) -> np.ndarray:
    kind = Policy(policy.kind)
    if kind is Policy.NONE:
        return encoded
    if kind is Policy.BARREL:
        width = encoded.shape[1] * 8
        out = encoded.copy()
        for s in np.unique(meta):
            if s:
                sel = meta == s
                out[sel] = _roll_bits(encoded[sel], width - int(s))
        return out
    return encoded ^ (np.asarray(meta, dtype=np.uint8) * np.uint8(0xFF))[:, None]
