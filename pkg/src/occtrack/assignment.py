"""Gated bipartite assignment between tracks (rows) and detections (columns)."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

HUNGARIAN = "hungarian"
GREEDY = "greedy"
STRATEGIES = (HUNGARIAN, GREEDY)


def assign(costs, gate: float, strategy: str = HUNGARIAN) -> list[tuple[int, int]]:
    """Match rows to columns using only pairs with ``cost <= gate``.

    ``hungarian`` returns a matching of maximum cardinality among the allowed
    pairs and, among those, the one with minimum total cost. ``greedy``
    repeatedly takes the cheapest remaining allowed pair, breaking ties by
    lower row and then lower column index.

    Returns:
        ``(row, col)`` pairs sorted by row.
    """
    c = np.asarray(costs, dtype=np.float64)
    if c.size == 0:
        return []
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite values")
    allowed = c <= gate
    if not allowed.any():
        return []
    if strategy == HUNGARIAN:
        return _hungarian(c, allowed)
    if strategy == GREEDY:
        return _greedy(c, allowed)
    raise ValueError(f"unknown assignment strategy {strategy!r}")


def _hungarian(c: np.ndarray, allowed: np.ndarray) -> list[tuple[int, int]]:
    # Disallowed pairs get a penalty larger than any achievable spread of
    # allowed totals, so the solver first maximises the number of allowed
    # pairs and only then minimises their summed cost.
    vals = c[allowed]
    lo, hi = float(vals.min()), float(vals.max())
    k = min(c.shape)
    big = k * (hi - lo) + abs(hi) + 1.0
    work = np.where(allowed, c, big)
    rows, cols = linear_sum_assignment(work)
    keep = allowed[rows, cols]
    return sorted(zip(rows[keep].tolist(), cols[keep].tolist()))


def _greedy(c: np.ndarray, allowed: np.ndarray) -> list[tuple[int, int]]:
    r, k = np.nonzero(allowed)
    # lexsort: last key is primary
    order = np.lexsort((k, r, c[r, k]))
    used_r, used_c = set(), set()
    out = []
    for i in order:
        ri, ci = int(r[i]), int(k[i])
        if ri in used_r or ci in used_c:
            continue
        used_r.add(ri)
        used_c.add(ci)
        out.append((ri, ci))
    return sorted(out)


def total_cost(costs, matching) -> float:
    """Exactly-rounded sum of the matched costs."""
    c = np.asarray(costs, dtype=np.float64)
    return math.fsum(float(c[i, j]) for i, j in matching)
