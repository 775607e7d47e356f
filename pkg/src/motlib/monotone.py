"""Monotonicity certification and maximal cyclically monotone extension.

A finite pair set S = {(x_i, y_i)} is cyclically monotone when every cyclic
rearrangement of the targets does not increase sum <x_i, y_i>; equivalently,
the complete digraph on pair indices with arc weight w(i -> j) =
<x_i, y_i - y_j> has no negative cycle.  Such a set extends to the
subdifferential of the max-affine potential

    psi(x) = max_i ( <y_i, x> - c_i ),   c_i = <y_i, x_i> - v_i,

where v_i is the longest-path value from a base pair in the digraph with arc
weight <y_j, x_i - x_j> on j -> i.  Cyclical monotonicity forbids positive
cycles there, so the values are finite and the construction is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NotCyclicallyMonotoneError
from .geometry import as_cloud, convex_hull_vertices


@dataclass(frozen=True, eq=False)
class PairSet:
    """Finite list of (x, y) pairs, both sides of dimension d."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_cloud(self.x))
        object.__setattr__(self, "y", as_cloud(self.y))
        if self.x.shape != self.y.shape:
            raise DomainError("pair set sides must have matching shapes")

    def __len__(self):
        return len(self.x)

    @property
    def dim(self):
        return self.x.shape[1]


def as_pairset(pairs):
    if isinstance(pairs, PairSet):
        return pairs
    if isinstance(pairs, tuple) and len(pairs) == 2:
        return PairSet(pairs[0], pairs[1])
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2 and arr.shape[1] % 2 == 0:
        d = arr.shape[1] // 2
        return PairSet(arr[:, :d], arr[:, d:])
    raise DomainError("cannot interpret input as a pair set")


@dataclass(frozen=True)
class MonotoneVerdict:
    holds: bool
    witness: Optional[tuple] = None
    deficit: Optional[float] = None

    def __bool__(self):
        return self.holds


def _bilinear_scale(S):
    mags = 0.0
    if len(S):
        mags = max(float(np.abs(S.x).max()), float(np.abs(S.y).max()))
    return 1.0 + mags * mags


def _cycle_weight_matrix(S):
    """W[i, j] = <x_i, y_i - y_j>; cycles of W sum the Definition deficit."""
    A = S.x @ S.y.T
    return np.diag(A)[:, None] - A


def is_monotone(pairs, tol=1e-9):
    """Pairwise monotonicity check: <y_j - y_i, x_j - x_i> >= -tol*scale.

    A violation is reported as a 2-cycle whose deficit equals the violating
    inner product.
    """
    S = as_pairset(pairs)
    n = len(S)
    if n <= 1:
        return MonotoneVerdict(True)
    B = S.y @ S.x.T
    diag = np.diag(B)
    D = diag[None, :] + diag[:, None] - B - B.T
    np.fill_diagonal(D, 0.0)
    thresh = -tol * _bilinear_scale(S)
    i, j = np.unravel_index(int(np.argmin(D)), D.shape)
    worst = float(D[i, j])
    if worst >= thresh:
        return MonotoneVerdict(True)
    return MonotoneVerdict(False, witness=(int(i), int(j)), deficit=worst)


def _extract_cycle(pred, start, n):
    """Walk predecessors n steps to land inside a cycle, then trace it."""
    node = start
    for _ in range(n):
        node = pred[node]
        if node < 0:
            return None
    cycle = [int(node)]
    cur = int(pred[node])
    while cur != node:
        cycle.append(cur)
        cur = int(pred[cur])
    cycle.reverse()
    k = int(np.argmin(cycle))
    return tuple(cycle[k:] + cycle[:k])


def _cycle_deficit(W, cycle):
    total = 0.0
    for a in range(len(cycle)):
        total += W[cycle[a], cycle[(a + 1) % len(cycle)]]
    return float(total)


def is_cyclically_monotone(pairs, tol=1e-9, max_rounds=None):
    """Negative-cycle certification of cyclical monotonicity.

    Runs label-correcting relaxation over the complete digraph (a virtual
    zero-cost source reaches every node).  The verdict fails only when an
    explicitly extracted cycle has deficit below -tol*scale, so zero-weight
    cycles and float dust count as monotone.
    """
    S = as_pairset(pairs)
    n = len(S)
    if n <= 1:
        return MonotoneVerdict(True)
    W = _cycle_weight_matrix(S)
    WT = np.ascontiguousarray(W.T)
    thresh = -tol * _bilinear_scale(S)
    dist = np.zeros(n)
    pred = np.full(n, -1)
    rounds = n if max_rounds is None else min(n, max_rounds)
    buf = np.empty_like(WT)

    def relax(passes):
        nonlocal dist
        for _ in range(passes):
            np.add(WT, dist[None, :], out=buf)
            nd = buf.min(axis=1)
            improved = nd < dist
            if not improved.any():
                return True
            pred[improved] = buf[improved].argmin(axis=1)
            dist = np.minimum(dist, nd)
        return False

    def best_witness():
        np.add(WT, dist[None, :], out=buf)
        nd = buf.min(axis=1)
        best_cycle, best_deficit = None, 0.0
        for node in np.nonzero(nd < dist)[0]:
            pred[node] = int(buf[node].argmin())
            cycle = _extract_cycle(pred, int(node), n)
            if cycle is None:
                continue
            deficit = _cycle_deficit(W, cycle)
            if deficit < best_deficit:
                best_cycle, best_deficit = cycle, deficit
        return best_cycle, best_deficit

    # extra passes let slowly-accumulating long cycles surface before the
    # exact re-evaluation decides against the tolerance
    for _ in range(3):
        if relax(rounds):
            return MonotoneVerdict(True)
        cycle, deficit = best_witness()
        if cycle is not None and deficit < thresh:
            return MonotoneVerdict(False, witness=cycle, deficit=deficit)
    return MonotoneVerdict(True)


def brute_force_cycle_oracle(pairs, tol=1e-9):
    """Exhaustive Definition check over all simple index cycles, |S| <= 8.

    Evaluates sum <x_i, y_i> - sum <x_i, y_{i+1}> (cyclic convention
    y_{n+1} := y_1) directly from the coordinates, independently of the
    weight-matrix reduction used by the checker.
    """
    S = as_pairset(pairs)
    n = len(S)
    if n > 8:
        raise DomainError("brute_force_cycle_oracle limited to 8 pairs")
    thresh = -tol * _bilinear_scale(S)
    indices = range(n)
    for size in range(2, n + 1):
        for subset in itertools.combinations(indices, size):
            first = subset[0]
            for rest in itertools.permutations(subset[1:]):
                cycle = (first,) + rest
                own = sum(float(S.x[i] @ S.y[i]) for i in cycle)
                shifted = sum(
                    float(S.x[cycle[a]] @ S.y[cycle[(a + 1) % size]])
                    for a in range(size))
                if own - shifted < thresh:
                    return False
    return True


def chain_components(pairs, tol=1e-9):
    """Zero-slack chain components of a cyclically monotone pair set.

    Pairs i and j are chained when optimal chains i -> j and j -> i have
    zero total weight; Rockafellar potentials from bases in one component
    agree up to an additive constant.
    """
    S = as_pairset(pairs)
    n = len(S)
    G = S.y @ S.x.T
    Om = G - np.diag(G)[:, None]  # Om[j, i] = <y_j, x_i - x_j>
    # all-pairs longest paths by max-plus Floyd-Warshall
    L = Om.copy()
    for k in range(n):
        np.maximum(L, L[:, k][:, None] + L[k][None, :], out=L)
    scale = 1.0 + max(float(np.abs(S.x).max()), float(np.abs(S.y).max())) ** 2 if n else 1.0
    slack = L + L.T  # slack[i, j] = best i->j plus best j->i, <= 0
    comp = np.full(n, -1)
    label = 0
    for i in range(n):
        if comp[i] >= 0:
            continue
        members = np.nonzero((slack[i] >= -tol * scale) & (comp < 0))[0]
        comp[members] = label
        comp[i] = label
        label += 1
    return [np.nonzero(comp == c)[0] for c in range(label)]


@dataclass(frozen=True, eq=False)
class MaxAffinePotential:
    """Convex psi(x) = max_i(<slopes_i, x> - intercepts_i).

    Immutable after construction; evaluation is thread-safe.
    """

    slopes: np.ndarray
    intercepts: np.ndarray
    base_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "slopes", as_cloud(self.slopes))
        object.__setattr__(self, "intercepts",
                           np.asarray(self.intercepts, dtype=float).ravel())
        if len(self.slopes) != self.intercepts.size or len(self.slopes) == 0:
            raise DomainError("potential needs matching slopes and intercepts")

    @property
    def dim(self):
        return self.slopes.shape[1]

    def piece_values(self, points):
        pts = as_cloud(points, self.dim)
        return pts @ self.slopes.T - self.intercepts[None, :]

    def value(self, points):
        """psi evaluated at one point or a cloud of points."""
        single = np.asarray(points).ndim == 1
        vals = self.piece_values(points).max(axis=1)
        return float(vals[0]) if single else vals

    def __call__(self, points):
        return self.value(points)


def _longest_paths_bellman(Om, base):
    """Longest-path values from base by Bellman relaxation, n-1 rounds.

    Raises if relaxation still improves afterwards (a positive cycle, i.e.
    the pair set was not cyclically monotone).
    """
    n = Om.shape[0]
    v = np.full(n, -np.inf)
    v[base] = 0.0
    OmT = np.ascontiguousarray(Om.T)
    buf = np.empty_like(OmT)
    for _ in range(max(n - 1, 1)):
        np.add(OmT, v[None, :], out=buf)
        nv = np.maximum(v, buf.max(axis=1))
        if np.array_equal(nv, v):
            break
        v = nv
    np.add(OmT, v[None, :], out=buf)
    check = buf.max(axis=1)
    tol = 1e-9 * (1.0 + float(np.abs(Om).max()))
    if (check > v + tol).any():
        raise NotCyclicallyMonotoneError(
            "positive cycle encountered in longest-path construction")
    return v


def _longest_paths_hinted(Om, base, hint, tol):
    """Exact longest paths via reweighting by a feasible potential.

    ``hint`` must satisfy Om[j, i] <= hint_i - hint_j (up to tol); the
    reweighted arc costs are then nonnegative and Dijkstra from the base
    reproduces the Bellman values.  Returns None when the hint is infeasible.
    """
    n = Om.shape[0]
    What = (hint[None, :] - hint[:, None]) - Om
    if float(What.min()) < -tol:
        return None
    np.maximum(What, 0.0, out=What)
    dist = np.full(n, np.inf)
    dist[base] = 0.0
    done = np.zeros(n, dtype=bool)
    masked = dist.copy()
    for _ in range(n):
        j = int(np.argmin(masked))
        if not np.isfinite(masked[j]):
            break
        done[j] = True
        masked[j] = np.inf
        np.minimum(dist, dist[j] + What[j], out=dist)
        np.copyto(masked, dist, where=~done)
    return (hint - hint[base]) - dist


def rockafellar_potential(pairs, base_index=0, tol=1e-9, reweight_hint=None):
    """Max-affine potential whose subdifferential maximally extends the set.

    Slopes are the y_i; intercepts come from longest-path values v_i from
    the base pair, so the affine piece i is active at x_i and every input
    pair satisfies y_i in dpsi(x_i).  ``reweight_hint`` optionally supplies
    a feasible potential (for instance derived from transport duals) that
    accelerates the longest-path computation without changing its result;
    an infeasible hint falls back to plain Bellman relaxation.

    Raises NotCyclicallyMonotoneError when the input is not cyclically
    monotone (carrying a witness cycle).
    """
    S = as_pairset(pairs)
    n = len(S)
    if n == 0:
        raise DomainError("cannot extend an empty pair set")
    if not 0 <= base_index < n:
        raise DomainError(f"base_index {base_index} out of range")
    G = S.y @ S.x.T
    Om = G - np.diag(G)[:, None]  # Om[j, i] = <y_j, x_i - x_j>
    v = None
    if reweight_hint is not None:
        hint = np.asarray(reweight_hint, dtype=float).ravel()
        if hint.size != n:
            raise DomainError("reweight_hint length must match the pair count")
        v = _longest_paths_hinted(Om, base_index, hint,
                                  tol * (1.0 + float(np.abs(Om).max())))
    if v is None:
        verdict = is_cyclically_monotone(S, tol)
        if not verdict.holds:
            raise NotCyclicallyMonotoneError(
                "pair set is not cyclically monotone",
                cycle=verdict.witness, deficit=verdict.deficit)
        v = _longest_paths_bellman(Om, base_index)
    intercepts = (S.y * S.x).sum(axis=1) - v
    return MaxAffinePotential(S.y.copy(), intercepts, base_index)


def eval_subdifferential(potential, point, tol=1e-9):
    """Vertices of the subdifferential of a max-affine potential at a point.

    The subdifferential is the convex hull of the slopes of all pieces
    active within tol*(1 + |psi(x)|); the hull's vertex cloud is returned.
    Never empty: a max-affine function is finite everywhere.
    """
    psi = potential
    x = np.asarray(point, dtype=float).ravel()
    vals = psi.piece_values(x.reshape(1, -1))[0]
    top = float(vals.max())
    active = vals >= top - tol * (1.0 + abs(top))
    return convex_hull_vertices(psi.slopes[active])


def subdifferential_contains(potential, pairs, tol=1e-9):
    """Check y_i in dpsi(x_i) for all pairs, via activity of piece i at x_i.

    This is the containment half of the Rockafellar construction and doubles
    as an O(n^2) certificate of cyclical monotonicity of the pair set: if
    every piece is active at its own site within eps, every cycle deficit is
    bounded below by -(cycle length)*eps.

    Returns the largest activity gap (nonnegative float).
    """
    S = as_pairset(pairs)
    vals = potential.piece_values(S.x)
    psi_at_x = vals.max(axis=1)
    # piece k belongs to pair k when the potential came from this pair set
    own = np.einsum("ij,ij->i", S.x, potential.slopes) - potential.intercepts
    gap = float((psi_at_x - own).max())
    return gap
