"""Independent reference implementations used only by the tests.

Each oracle takes a different route from the code it checks: exact integer
arithmetic instead of log-space floats, per-index enumeration instead of
reshapes, per-bit Python loops instead of packed numpy.
"""

import math
from fractions import Fraction
from math import comb


def exact_p_duty_deviation(K, rho: Fraction, b) -> Fraction:
    if 2 * b == K:
        return Fraction(1)
    idx = set(range(0, b + 1)) | set(range(K - b, K + 1))
    return sum((comb(K, i) * rho**i * (1 - rho) ** (K - i) for i in idx), Fraction(0))


def exact_tails(cells, p: Fraction, ns):
    """{n: (num, den)} with P(X >= n) = num / den, X ~ Binomial(cells, p), exact.

    With p = a/d and c = d - a, the tail numerator over d**cells is
    a**n * H[n], where H[i] = C(cells, i) c**(cells-i) + a H[i+1] is evaluated
    by a Horner sweep from i = cells down using only big-by-small products.
    """
    a, d = p.numerator, p.denominator
    c = d - a
    want = set(ns)
    h = {}
    acc = 0
    term = 1  # C(cells, i) * c**(cells - i)
    for i in range(cells, -1, -1):
        acc = term + a * acc
        if i in want:
            h[i] = acc
        if i:
            term = term * c * i // (cells - i + 1)
    den = d**cells
    return {n: (a**n * h[n], den) for n in ns}


def ratio_float(num, den) -> float:
    return num / den  # int true division is correctly rounded


def ratio_log(num, den) -> float:
    return math.log(num) - math.log(den)


def enumerate_blocks(layers, layer_words, f, n, rows):
    """Block contents by direct index arithmetic: list of rows x (f*n) word lists."""
    chunk = rows * n
    blocks = []
    for layer, words in zip(layers, layer_words):
        F, E = layer.filters, layer.per_filter
        sets = -(-F // f)
        chunks = -(-E // chunk)
        for s in range(sets):
            for c in range(chunks):
                block = []
                for r in range(rows):
                    word = []
                    for k in range(f):
                        for j in range(n):
                            filt = s * f + k
                            e = c * chunk + r * n + j
                            word.append(int(words[filt * E + e]) if filt < F and e < E else 0)
                    block.append(word)
                blocks.append(block)
    return blocks


def replay_cells(stream, encoder, word_bits):
    """Per-cell ones / totals by encoding each row write as a Python int."""
    ones = {}
    totals = {}
    for blk, base, dwell in stream.block_writes():
        data = stream.blocks[blk]
        for r in range(data.shape[0]):
            row = base + r
            word = int.from_bytes(data[r].tobytes(), "little")
            enc, _ = encoder.encode(word, row)
            for bit in range(word_bits):
                key = (row, bit)
                ones[key] = ones.get(key, 0) + dwell * ((enc >> bit) & 1)
            totals[row] = totals.get(row, 0) + dwell
        encoder.end_block()
    return ones, totals
