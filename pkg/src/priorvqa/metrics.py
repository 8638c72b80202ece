"""Correlation metrics between predicted scores and MOS labels.

PLCC is Pearson correlation of raw values; SRCC is Pearson correlation of
average-fractional ranks, so tied values share the mean of the rank
positions they occupy.  Both are undefined when either argument has zero
variance, and that surfaces as an error rather than a NaN.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, UndefinedCorrelationError


def _paired(pred, mos) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    m = np.asarray(mos, dtype=np.float64)
    if p.ndim != 1 or m.ndim != 1:
        raise ContractError(f"scores must be rank-1, got {p.shape} and {m.shape}")
    if p.shape[0] != m.shape[0]:
        raise ContractError(f"length mismatch: {p.shape[0]} predictions, {m.shape[0]} labels")
    if p.shape[0] < 2:
        raise ContractError("correlation needs at least 2 pairs")
    return p, m


def plcc(pred, mos) -> float:
    p, m = _paired(pred, mos)
    pc = p - p.mean()
    mc = m - m.mean()
    denom = np.sqrt((pc * pc).sum() * (mc * mc).sum())
    if denom == 0.0:
        raise UndefinedCorrelationError("constant input: correlation undefined")
    return float((pc * mc).sum() / denom)


def average_ranks(x) -> np.ndarray:
    """1-based ranks; a run of equal values gets the mean of its positions."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def srcc(pred, mos) -> float:
    p, m = _paired(pred, mos)
    return plcc(average_ranks(p), average_ranks(m))
