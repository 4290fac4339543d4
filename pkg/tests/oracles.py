"""Independent reference computations used to check the library."""

import itertools
import math

import numpy as np

RASTER_STEP = 0.01


def _cells(lo, hi, extent):
    # cell centres of a RASTER_STEP grid covering [0, extent)
    n = int(round(extent / RASTER_STEP))
    centres = (np.arange(n) + 0.5) * RASTER_STEP
    return (centres >= lo) & (centres < hi)


def raster_iou(a, b, extent=None):
    """IoU by counting 0.01-px cells whose centres fall inside each box.

    Boxes are axis-aligned, so the 2-D masks are outer products of 1-D masks
    and the cell counts factor per axis.
    """
    extent = extent or math.ceil(max(a[2], a[3], b[2], b[3])) + 1
    ax, ay = _cells(a[0], a[2], extent), _cells(a[1], a[3], extent)
    bx, by = _cells(b[0], b[2], extent), _cells(b[1], b[3], extent)
    inter = int((ax & bx).sum()) * int((ay & by).sum())
    area_a = int(ax.sum()) * int(ay.sum())
    area_b = int(bx.sum()) * int(by.sum())
    union = area_a + area_b - inter
    return inter / union if union else 0.0


def brute_force_assignment(costs, gate):
    """Best gated matching by enumerating every permutation of a padded square.

    Returns ``(n_pairs, total)`` with the lexicographic optimum: most pairs,
    then least exactly-summed cost.
    """
    c = np.asarray(costs, dtype=float)
    n, m = c.shape
    k = max(n, m)
    best = (0, 0.0)
    for perm in itertools.permutations(range(k)):
        pairs = [(i, perm[i]) for i in range(n) if perm[i] < m and c[i, perm[i]] <= gate]
        cand = (len(pairs), math.fsum(c[i, j] for i, j in pairs))
        if cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            best = cand
    return best


def brute_force_assignment_fast(costs, gate, perms):
    """Vectorised form of :func:`brute_force_assignment` for a fixed padded size.

    ``perms`` is the ``(k!, k)`` array of permutations of ``range(k)``.
    """
    c = np.asarray(costs, dtype=float)
    n, m = c.shape
    k = perms.shape[1]
    pad = np.full((k, k), np.inf)
    pad[:n, :m] = c
    picked = pad[np.arange(k)[None, :], perms]
    ok = picked <= gate
    count = ok.sum(1)
    total = np.where(ok, picked, 0.0).sum(1)
    top = count.max()
    cand = np.nonzero(count == top)[0]
    # resolve near-ties with exact summation
    approx = total[cand]
    near = cand[approx <= approx.min() + 1e-9]
    sums = []
    for p in near:
        sums.append(math.fsum(pad[i, perms[p, i]] for i in range(k) if ok[p, i]))
    return int(top), min(sums)


def linear_count_above(values, threshold):
    n = 0
    for v in values:
        if v > threshold:
            n += 1
    return n
