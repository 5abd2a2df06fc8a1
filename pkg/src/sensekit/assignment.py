"""Minimum-cost perfect matching on square cost matrices.

Potentials-based Hungarian algorithm (shortest augmenting paths), O(n^3).
Matrices here are tiny (k x k with k around 5), so the point is exactness
and determinism, not speed.
"""

from __future__ import annotations

import math

import numpy as np


def bipartite_match_cost(cost) -> tuple[float, tuple[int, ...]]:
    """Return (total, assignment) of a minimum-cost perfect matching.

    ``assignment[i]`` is the column matched to row i; ``total`` is the sum
    of the matched entries. Raises ValueError for non-square or non-finite
    input.
    """
    matrix = np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {matrix.shape}")
    if matrix.size == 0:
        raise ValueError("cost matrix must be non-empty")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("cost matrix holds non-finite entries")

    n = matrix.shape[0]
    # 1-indexed arrays with column 0 as the sentinel start of each
    # augmenting path; p[j] is the row currently matched to column j.
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [math.inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = math.inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = matrix[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[p[j] - 1] = j - 1
    total = float(sum(matrix[i][assignment[i]] for i in range(n)))
    return total, tuple(assignment)
