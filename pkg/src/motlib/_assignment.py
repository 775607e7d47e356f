"""Exact solvers for the uniform equal-size (assignment) transport case.

Two routes, both exact minimizers:

* ``scipy.optimize.linear_sum_assignment`` for cold starts (no duals out);
* a warm-startable Jonker-Volgenant shortest-augmenting-path solver that
  maintains feasible dual potentials (u, v) with ``u_i + v_j <= c_ij`` and
  tightness on matched arcs, so the returned duals certify optimality.  A
  good initial ``v`` (for instance from a closed-form population potential)
  makes the augmenting searches short; correctness never depends on it.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def assignment_jv(C, v_init=None):
    """Solve min sum C[i, sigma(i)] exactly; return (sigma, u, v).

    The duals satisfy C - u[:, None] - v[None, :] >= -O(ulp) with equality
    on the matched arcs, certifying optimality.
    """
    C = np.ascontiguousarray(C, dtype=float)
    n = C.shape[0]
    if C.shape[1] != n:
        raise ValueError("assignment requires a square cost matrix")
    v = np.zeros(n) if v_init is None else np.asarray(v_init, dtype=float).copy()
    if v.shape != (n,) or not np.isfinite(v).all():
        raise ValueError("dual warm start must be a finite length-n vector")
    u = (C - v[None, :]).min(axis=1)
    row_of = np.full(n, -1)
    col_of = np.full(n, -1)
    # greedy pass over the tight arcs produced by the row reduction
    jstar = np.argmin(C - u[:, None] - v[None, :], axis=1)
    for i in range(n):
        j = jstar[i]
        if row_of[j] < 0:
            row_of[j] = i
            col_of[i] = j
    idx = np.arange(n)
    INF = np.inf
    for i0 in idx[col_of < 0]:
        dist = C[i0] - u[i0] - v
        work = dist.copy()
        came_row = np.full(n, i0)
        done = np.zeros(n, dtype=bool)
        while True:
            j = int(np.argmin(work))
            dj = work[j]
            done[j] = True
            work[j] = INF
            dist[j] = dj
            if row_of[j] < 0:
                j_end, d_end = j, dj
                break
            i2 = row_of[j]
            red = C[i2] - u[i2] - v
            nd = dj + red - red[j]
            upd = (nd < work) & ~done
            came_row[upd] = i2
            work[upd] = nd[upd]
        done[j_end] = False
        scanned = idx[done]
        v[scanned] += dist[scanned] - d_end
        u[row_of[scanned]] += d_end - dist[scanned]
        u[i0] += d_end
        j = j_end
        while True:
            i = came_row[j]
            row_of[j] = i
            col_of[i], j = j, col_of[i]
            if i == i0:
                break
    return col_of, u, v


def solve_assignment(C, dual_hint=None):
    """Route to the JV solver when a dual hint is available, else scipy.

    Returns (sigma, u, v); duals are None on the scipy route.
    """
    if dual_hint is not None:
        return assignment_jv(C, dual_hint)
    rows, cols = linear_sum_assignment(C)
    sigma = np.empty(C.shape[0], dtype=np.int64)
    sigma[rows] = cols
    return sigma, None, None
