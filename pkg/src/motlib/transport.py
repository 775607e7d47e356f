"""Discrete measures and exact optimal transport under squared Euclidean cost.

The solver returns exact vertex solutions, so supports of optimal couplings
are cyclically monotone up to float rounding (the finite Knott-Smith
equivalence), which downstream modules certify and extend.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from ._assignment import assignment_jv, solve_assignment
from ._netsimplex import transport_simplex
from .errors import DomainError, MarginError
from .geometry import as_cloud, has_duplicate_points
from .monotone import PairSet

UNIFORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted finite point set with unit total mass and distinct points."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", as_cloud(self.points))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=float).ravel())

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def is_uniform(self, tol=UNIFORM_TOL):
        n = len(self)
        return bool(np.abs(self.weights - 1.0 / n).max() <= tol)


def make_discrete_measure(points, weights):
    """Validated measure; weights are renormalized when their sum is within
    1e-9 of one, otherwise the input is rejected."""
    pts = as_cloud(points)
    w = np.asarray(weights, dtype=float).ravel()
    if len(pts) != w.size:
        raise DomainError("points and weights must have matching lengths")
    if len(pts) == 0:
        raise DomainError("measure needs at least one point")
    if (w <= 0).any():
        raise DomainError("weights must be strictly positive")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"weights sum to {total!r}, expected 1")
    if has_duplicate_points(pts):
        raise DomainError("measure support points must be pairwise distinct")
    return DiscreteMeasure(pts, w / total)


def uniform_measure(points):
    pts = as_cloud(points)
    n = len(pts)
    return make_discrete_measure(pts, np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse joint plan between two discrete measures.

    ``rows``/``cols``/``mass`` are parallel COO triplets.  The optional dual
    potentials come from the solver and certify optimality
    (source_potential[i] + target_potential[j] <= |x_i - y_j|^2 with
    equality on the support); they are computational metadata and are not
    serialized.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    source_potential: Optional[np.ndarray] = field(default=None, compare=False)
    target_potential: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64).ravel())
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.int64).ravel())
        object.__setattr__(self, "mass", np.asarray(self.mass, dtype=float).ravel())
        if not (len(self.rows) == len(self.cols) == len(self.mass)):
            raise DomainError("coupling triplets must have equal lengths")
        if (self.mass < 0).any():
            raise DomainError("coupling mass must be nonnegative")

    def transport_cost(self):
        diff = self.source.points[self.rows] - self.target.points[self.cols]
        return float((self.mass * (diff * diff).sum(axis=1)).sum())

    def row_sums(self):
        out = np.zeros(len(self.source))
        np.add.at(out, self.rows, self.mass)
        return out

    def col_sums(self):
        out = np.zeros(len(self.target))
        np.add.at(out, self.cols, self.mass)
        return out

    def support_indices(self, floor=1e-12):
        thr = floor * min(float(self.source.weights.min()),
                          float(self.target.weights.min()))
        keep = self.mass > thr
        order = np.lexsort((self.cols[keep], self.rows[keep]))
        return self.rows[keep][order], self.cols[keep][order]


def solve_discrete_ot(P, Q, method="auto", dual_hint_target=None):
    """Exact minimizer of sum pi_ij |x_i - y_j|^2 over couplings of P and Q.

    ``method``:
      - "auto": dedicated assignment solver when both measures are uniform
        with equal support sizes, transportation network simplex otherwise;
      - "assignment": force the assignment route (errors when inapplicable);
      - "simplex": force the network simplex.

    ``dual_hint_target`` optionally warm-starts the assignment solver with
    target-side dual values (e.g. from a closed-form population potential);
    it changes the route to the warm solver but never the minimizer.
    Deterministic for a fixed input ordering.
    """
    if P.dim != Q.dim:
        raise DomainError("source and target dimension mismatch")
    C = cdist(P.points, Q.points, "sqeuclidean")
    uniform_equal = len(P) == len(Q) and P.is_uniform() and Q.is_uniform()
    if method == "assignment" and not uniform_equal:
        raise DomainError("assignment method needs uniform weights and "
                          "equal support sizes")
    use_assignment = uniform_equal and method in ("auto", "assignment")
    if use_assignment:
        n = len(P)
        if dual_hint_target is not None:
            sigma, u, v = assignment_jv(C, dual_hint_target)
        else:
            sigma, u, v = solve_assignment(C)
        rows = np.arange(n)
        return Coupling(P, Q, rows, sigma, np.full(n, 1.0 / n),
                        source_potential=u, target_potential=v)
    if method not in ("auto", "simplex"):
        raise DomainError(f"unknown method {method!r}")
    rows, cols, mass, u, v = transport_simplex(P.weights, Q.weights, C)
    order = np.lexsort((cols, rows))
    return Coupling(P, Q, rows[order], cols[order], mass[order],
                    source_potential=u, target_potential=v)


def brute_force_ot(P, Q):
    """Exhaustive minimum over all permutation couplings; n <= 8, uniform.

    The cost matrix is evaluated with plain broadcasting, independently of
    the solver's cdist route.
    """
    n = len(P)
    if len(Q) != n or not (P.is_uniform() and Q.is_uniform()):
        raise DomainError("brute_force_ot requires uniform measures of equal size")
    if n > 8:
        raise DomainError("brute_force_ot limited to 8 points")
    diff = P.points[:, None, :] - Q.points[None, :, :]
    C = (diff * diff).sum(axis=2)
    best_cost = np.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        c = float(C[range(n), perm].sum())
        if c < best_cost:
            best_cost = c
            best_perm = perm
    rows = np.arange(n)
    return Coupling(P, Q, rows, np.array(best_perm), np.full(n, 1.0 / n))


def coupling_support(coupling, floor=1e-12):
    """Pairs (x_i, y_j) carrying plan mass above the relative floor."""
    rows, cols = coupling.support_indices(floor)
    return PairSet(coupling.source.points[rows], coupling.target.points[cols])


def margins_of(coupling):
    """Recompute the plan margins and reattach them to the support points.

    Raises MarginError when either margin strays from the stored measure by
    more than 1e-9.
    """
    rs = coupling.row_sums()
    cs = coupling.col_sums()
    if np.abs(rs - coupling.source.weights).max() > 1e-9:
        raise MarginError("plan row sums disagree with the source measure")
    if np.abs(cs - coupling.target.weights).max() > 1e-9:
        raise MarginError("plan column sums disagree with the target measure")
    return (make_discrete_measure(coupling.source.points, rs),
            make_discrete_measure(coupling.target.points, cs))


def _spd_check(M, name):
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > 1e-9 * scale:
        raise DomainError(f"{name} must be symmetric")
    w = np.linalg.eigvalsh((A + A.T) / 2)
    if w.min() <= 0:
        raise DomainError(f"{name} must be positive definite")
    return (A + A.T) / 2


def _spd_power(M, p):
    w, V = np.linalg.eigh(M)
    w = np.maximum(w, 1e-12)
    return (V * w ** p) @ V.T


def gaussian_brenier(cov_source, cov_target):
    """Closed-form linear optimal map between centred Gaussians.

    A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2}; symmetric positive
    definite and A S1 A = S2 within 1e-8.
    """
    S1 = _spd_check(cov_source, "cov_source")
    S2 = _spd_check(cov_target, "cov_target")
    S1h = _spd_power(S1, 0.5)
    S1ih = _spd_power(S1, -0.5)
    mid = _spd_power(S1h @ S2 @ S1h, 0.5)
    A = S1ih @ mid @ S1ih
    A = (A + A.T) / 2
    resid = np.abs(A @ S1 @ A - S2).max()
    if resid > 1e-8 * max(1.0, float(np.abs(S2).max())):
        raise RuntimeError(f"gaussian_brenier residual {resid:g} out of tolerance")
    return A


def sorted_1d_ot(P, Q):
    """Monotone-rearrangement coupling for d = 1 (north-west corner on the
    sorted supports); an independent oracle for the exact solver."""
    if P.dim != 1 or Q.dim != 1:
        raise DomainError("sorted_1d_ot requires dimension 1")
    src_order = np.argsort(P.points[:, 0], kind="stable")
    tgt_order = np.argsort(Q.points[:, 0], kind="stable")
    s = P.weights[src_order].copy()
    d = Q.weights[tgt_order].copy()
    rows, cols, mass = [], [], []
    i = j = 0
    while i < len(s) and j < len(d):
        amt = min(s[i], d[j])
        if amt > 0:
            rows.append(src_order[i])
            cols.append(tgt_order[j])
            mass.append(amt)
        s[i] -= amt
        d[j] -= amt
        if s[i] <= 1e-15:
            i += 1
        if i < len(s) and d[j] <= 1e-15:
            j += 1
    order = np.lexsort((cols, rows))
    return Coupling(P, Q, np.array(rows)[order], np.array(cols)[order],
                    np.array(mass)[order])
