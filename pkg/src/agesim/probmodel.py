"""Binomial model of duty-cycle deviation.

A cell that receives K independent bits, each '1' with probability rho, ends up
with duty-cycle i/K where i ~ Binomial(K, rho). `p_duty_deviation` is the
probability that the duty-cycle is at most b/K or at least 1 - b/K;
`p_at_least_n` lifts that to a population of independent cells.

Both are evaluated in log space (log-gamma binomial coefficients) and summed
smallest-term-first with `math.fsum`, so populations of 10^4+ cells are fine.
"""

from __future__ import annotations

import math

import numpy as np


def _log_pmf_terms(n: int, p: float, idx) -> list[float]:
    """log C(n,i) p^i (1-p)^(n-i) for i in idx; -inf for impossible terms."""
    out = []
    lg_n = math.lgamma(n + 1)
    for i in idx:
        if p == 0.0:
            out.append(0.0 if i == 0 else -math.inf)
            continue
        if p == 1.0:
            out.append(0.0 if i == n else -math.inf)
            continue
        out.append(lg_n - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                   + i * math.log(p) + (n - i) * math.log1p(-p))
    return out


def _sum_exp(logs) -> float:
    terms = sorted(math.exp(v) for v in logs if v != -math.inf)
    return math.fsum(terms)


def _log_sum_exp(logs) -> float:
    logs = [v for v in logs if v != -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(math.fsum(sorted(math.exp(v - top) for v in logs)))


def _check_k_rho_b(K, rho, b):
    if int(K) != K or K < 1:
        raise ValueError(f"K must be an integer >= 1, got {K}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if int(b) != b or not 0 <= b <= K // 2:
        raise ValueError(f"b must be an integer in [0, {K // 2}], got {b}")


def p_duty_deviation(K: int, rho: float, b: int) -> float:
    """P(duty-cycle <= b/K or >= 1 - b/K) for one cell; exactly 1 when b/K = 0.5."""
    _check_k_rho_b(K, rho, b)
    if 2 * b == K:
        return 1.0
    idx = list(range(0, b + 1)) + list(range(K - b, K + 1))
    return min(1.0, max(0.0, _sum_exp(_log_pmf_terms(K, rho, idx))))


def _check_cells(cells, n):
    if int(cells) != cells or cells < 1:
        raise ValueError(f"cells must be an integer >= 1, got {cells}")
    if int(n) != n or not 0 <= n <= cells:
        raise ValueError(f"n must be an integer in [0, {cells}], got {n}")


def log_binomial_tail(cells: int, p: float, n: int) -> float:
    """log P(X >= n), X ~ Binomial(cells, p)."""
    if n == 0:
        return 0.0
    return _log_sum_exp(_log_pmf_terms(cells, p, range(n, cells + 1)))


def p_at_least_n(K: int, rho: float, b: int, cells: int, n: int) -> float:
    """Probability that at least n of `cells` cells deviate (see `p_duty_deviation`)."""
    _check_k_rho_b(K, rho, b)
    _check_cells(cells, n)
    if n == 0:
        return 1.0
    pb = p_duty_deviation(K, rho, b)
    # fsum is correctly rounded, so the result is non-increasing in n.
    return min(1.0, _sum_exp(_log_pmf_terms(cells, pb, range(n, cells + 1))))


def log_p_at_least_n(K: int, rho: float, b: int, cells: int, n: int) -> float:
    """Natural log of `p_at_least_n`; usable where the probability underflows."""
    _check_k_rho_b(K, rho, b)
    _check_cells(cells, n)
    return min(0.0, log_binomial_tail(cells, p_duty_deviation(K, rho, b), n))


def deviation_curve(K: int, rho: float) -> np.ndarray:
    """Rows of (b, b/K, P_{b/K}) for b = 0..floor(K/2)."""
    if int(K) != K or K < 1:
        raise ValueError(f"K must be an integer >= 1, got {K}")
    rows = [(b, b / K, p_duty_deviation(K, rho, b)) for b in range(K // 2 + 1)]
    return np.array(rows, dtype=np.float64)
