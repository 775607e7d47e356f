"""Transportation network simplex with Bland's anti-cycling pivot rule.

Solves  min sum_{ij} cost[i, j] * x[i, j]
        s.t. sum_j x[i, j] = supply[i],  sum_i x[i, j] = demand[j],  x >= 0

exactly, on a basis that is always a spanning tree of the bipartite node
set.  Costs are pre-scaled by their maximum entry so the entering-arc
threshold is a fixed relative tolerance.  The entering arc is the lowest
(row-major) index with negative reduced cost and the leaving arc the lowest
index attaining the ratio-test minimum, which is Bland's rule and rules out
cycling through degenerate pivots.  Intended for desk-scale weighted
instances; the uniform equal-size case has a faster dedicated solver.
"""

from __future__ import annotations

import numpy as np

ENTER_TOL = 1e-12


def _northwest_corner(supply, demand):
    m, n = len(supply), len(demand)
    s = supply.copy()
    d = demand.copy()
    arcs = []
    flows = []
    i = j = 0
    while True:
        amt = min(s[i], d[j])
        arcs.append((i, j))
        flows.append(amt)
        s[i] -= amt
        d[j] -= amt
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1:
            i += 1
        elif i == m - 1:
            j += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return arcs, flows


def _compute_duals(arcs, cost, m, n):
    adj = [[] for _ in range(m + n)]
    for (i, j) in arcs:
        adj[i].append((j + m, cost[i, j]))
        adj[j + m].append((i, cost[i, j]))
    u = np.zeros(m + n)
    seen = np.zeros(m + n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        node = stack.pop()
        for other, c in adj[node]:
            if not seen[other]:
                u[other] = c - u[node]
                seen[other] = True
                stack.append(other)
    if not seen.all():
        raise RuntimeError("simplex basis is not a spanning tree")
    return u[:m], u[m:]


def _tree_path(arcs, start, goal, m):
    """Arc-index path between two nodes of the basis tree."""
    adj = {}
    for k, (i, j) in enumerate(arcs):
        adj.setdefault(i, []).append((j + m, k))
        adj.setdefault(j + m, []).append((i, k))
    prev = {start: (None, None)}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for other, k in adj.get(node, ()):
            if other not in prev:
                prev[other] = (node, k)
                stack.append(other)
    path = []
    node = goal
    while prev[node][0] is not None:
        parent, k = prev[node]
        path.append((k, parent, node))
        node = parent
    path.reverse()
    return path


def transport_simplex(supply, demand, cost, max_pivots=None):
    """Exact basic optimal solution; returns (rows, cols, mass, u, v).

    The returned triplets cover the basic arcs with strictly positive flow.
    Duals satisfy u_i + v_j <= cost_ij (up to the relative tolerance) with
    equality on basic arcs.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    if abs(supply.sum() - demand.sum()) > 1e-9 * max(1.0, supply.sum()):
        raise ValueError("supply and demand must balance")
    cmax = float(cost.max())
    scale = cmax if cmax > 0 else 1.0
    C = cost / scale
    arcs, flows = _northwest_corner(supply, demand)
    flow = {arc: f for arc, f in zip(arcs, flows)}
    if max_pivots is None:
        max_pivots = 1000 + 50 * (m + n) ** 2
    for _ in range(max_pivots):
        u, v = _compute_duals(arcs, C, m, n)
        red = C - u[:, None] - v[None, :]
        # basic arcs are tight by construction; mask out their float dust so
        # a basis arc can never be nominated as entering
        basis = set(arcs)
        entering = None
        for flat in np.flatnonzero(red.ravel() < -ENTER_TOL):
            candidate = divmod(int(flat), n)
            if candidate not in basis:
                entering = candidate
                break
        if entering is None:
            rows = np.array([a[0] for a in arcs])
            cols = np.array([a[1] for a in arcs])
            mass = np.array([flow[a] for a in arcs])
            keep = mass > 0
            return rows[keep], cols[keep], np.maximum(mass[keep], 0.0), u * scale, v * scale
        ei, ej = entering
        # the unique tree path target(ej) -> source(ei) closes the cycle
        path = _tree_path(arcs, ej + m, ei, m)
        cycle = [(None, +1, (ei, ej))]
        for k, frm, to in path:
            i, j = arcs[k]
            sign = +1 if frm == i else -1
            cycle.append((k, sign, (i, j)))
        reducers = [(k, arc) for k, sign, arc in cycle if sign < 0]
        theta = min(flow[arc] for _, arc in reducers)
        leave_k, leave_arc = min(
            ((k, arc) for k, arc in reducers if flow[arc] <= theta),
            key=lambda t: t[1])
        for k, sign, arc in cycle:
            if k is None:
                flow[arc] = flow.get(arc, 0.0) + sign * theta
            else:
                flow[arc] += sign * theta
        del flow[leave_arc]
        arcs[leave_k] = (ei, ej)
    raise RuntimeError("network simplex exceeded its pivot budget "
                       "(anti-cycling rule violated; internal bug)")
