"""Point clouds, symbolic sets, Hausdorff distance, support functions, horizons.

Compact sets are represented throughout by finite vertex clouds or lattices,
so every set-valued quantity here is a finite approximation with explicit,
controllable spacing.  All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import cdist

from .errors import DomainError

DEDUPE_TOL = 1e-12


def as_cloud(points, dim=None):
    """Validate and return a point cloud as a float (n, d) array.

    Accepts a single point, a list of points, or an (n, d) array.  A cloud
    may be empty only when ``dim`` is given so the shape stays unambiguous.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.size else pts.reshape(0, dim or 0)
    if pts.ndim != 2:
        raise DomainError(f"point cloud must be 2-d, got shape {pts.shape}")
    if dim is not None and pts.shape[1] != dim:
        raise DomainError(f"expected dimension {dim}, got {pts.shape[1]}")
    if pts.size and not np.isfinite(pts).all():
        raise DomainError("point cloud contains non-finite coordinates")
    return pts


def as_direction(u):
    """Normalize ``u`` to a unit vector; reject near-zero input."""
    v = np.asarray(u, dtype=float).ravel()
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm < 1e-300:
        raise DomainError("direction must be a nonzero finite vector")
    return v / nrm


def dedupe_points(points, tol=DEDUPE_TOL):
    """Drop points that coincide within ``tol``, keeping first occurrences.

    Uses a lexicographic sort and a sliding window over the first coordinate,
    so the cost is O(n log n + n w) with w the window width.
    """
    pts = as_cloud(points)
    n = len(pts)
    if n <= 1:
        return pts.copy()
    order = np.lexsort(pts.T[::-1])
    sorted_pts = pts[order]
    drop = np.zeros(n, dtype=bool)
    x0 = sorted_pts[:, 0]
    for a in range(n):
        if drop[order[a]]:
            continue
        b = a + 1
        while b < n and x0[b] - x0[a] <= tol:
            if not drop[order[b]] and np.abs(sorted_pts[b] - sorted_pts[a]).max() <= tol:
                # keep whichever appeared first in the original ordering
                if order[b] > order[a]:
                    drop[order[b]] = True
                else:
                    drop[order[a]] = True
                    break
            b += 1
    return pts[~drop]


def has_duplicate_points(points, tol=DEDUPE_TOL):
    pts = as_cloud(points)
    return len(dedupe_points(pts, tol)) < len(pts)


# ---------------------------------------------------------------------------
# symbolic set descriptors


class SetDescriptor:
    """Base class for the symbolic sets used as diagnostics probes."""

    def bounded(self):
        raise NotImplementedError

    @property
    def dim(self):
        raise NotImplementedError

    def distance(self, points):
        """Euclidean distance from each point of a cloud to the set."""
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(SetDescriptor):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    def bounded(self):
        return True

    @property
    def dim(self):
        return self.center.size

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        return np.maximum(np.linalg.norm(pts - self.center, axis=1) - self.radius, 0.0)

    def to_json(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(SetDescriptor):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).ravel())
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).ravel())
        if self.lo.size != self.hi.size or np.any(self.lo > self.hi):
            raise DomainError("box requires lo <= hi componentwise")

    def bounded(self):
        return True

    @property
    def dim(self):
        return self.lo.size

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        gap = np.maximum(np.maximum(self.lo - pts, pts - self.hi), 0.0)
        return np.linalg.norm(gap, axis=1)

    def to_json(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Ray(SetDescriptor):
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).ravel())
        object.__setattr__(self, "direction", as_direction(self.direction))

    def bounded(self):
        return False

    @property
    def dim(self):
        return self.origin.size

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        rel = pts - self.origin
        t = np.maximum(rel @ self.direction, 0.0)
        return np.linalg.norm(rel - t[:, None] * self.direction, axis=1)

    def to_json(self):
        return {"type": "ray", "origin": self.origin.tolist(),
                "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class Cone(SetDescriptor):
    """Union of rays from a common apex along finitely many unit directions."""

    apex: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float).ravel())
        dirs = as_cloud(self.directions, self.apex.size)
        if len(dirs) == 0:
            raise DomainError("cone needs at least one direction")
        dirs = np.stack([as_direction(u) for u in dirs])
        object.__setattr__(self, "directions", dirs)

    def bounded(self):
        return False

    @property
    def dim(self):
        return self.apex.size

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        best = np.full(len(pts), np.inf)
        for u in self.directions:
            best = np.minimum(best, Ray(self.apex, u).distance(pts))
        return best

    def to_json(self):
        return {"type": "cone", "apex": self.apex.tolist(),
                "directions": self.directions.tolist()}


@dataclass(frozen=True, eq=False)
class Finite(SetDescriptor):
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", as_cloud(self.points))
        if len(self.points) == 0:
            raise DomainError("finite descriptor needs at least one point")

    def bounded(self):
        return True

    @property
    def dim(self):
        return self.points.shape[1]

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        return cdist(pts, self.points).min(axis=1)

    def to_json(self):
        return {"type": "finite", "points": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class Product(SetDescriptor):
    """Cartesian product, used for graph-space probes in R^d x R^d."""

    first: SetDescriptor
    second: SetDescriptor

    def bounded(self):
        return self.first.bounded() and self.second.bounded()

    @property
    def dim(self):
        return self.first.dim + self.second.dim

    def distance(self, points):
        pts = as_cloud(points, self.dim)
        d1 = self.first.distance(pts[:, : self.first.dim])
        d2 = self.second.distance(pts[:, self.first.dim:])
        return np.hypot(d1, d2)

    def to_json(self):
        return {"type": "product", "first": self.first.to_json(),
                "second": self.second.to_json()}


@dataclass(frozen=True, eq=False)
class Union(SetDescriptor):
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise DomainError("union needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise DomainError("union parts must share a dimension")
        object.__setattr__(self, "parts", parts)

    def bounded(self):
        return all(p.bounded() for p in self.parts)

    @property
    def dim(self):
        return self.parts[0].dim

    def distance(self, points):
        return np.min([p.distance(points) for p in self.parts], axis=0)

    def to_json(self):
        return {"type": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class GridOf(SetDescriptor):
    """A bounded descriptor together with a preferred lattice resolution."""

    inner: SetDescriptor
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise DomainError("resolution must be >= 1")

    def bounded(self):
        return self.inner.bounded()

    @property
    def dim(self):
        return self.inner.dim

    def distance(self, points):
        return self.inner.distance(points)

    def to_json(self):
        return {"type": "grid_of", "inner": self.inner.to_json(),
                "resolution": self.resolution}


def descriptor_from_json(obj):
    kind = obj.get("type")
    if kind == "ball":
        return Ball(obj["center"], obj["radius"])
    if kind == "box":
        return Box(obj["lo"], obj["hi"])
    if kind == "ray":
        return Ray(obj["origin"], obj["direction"])
    if kind == "cone":
        return Cone(obj["apex"], obj["directions"])
    if kind == "finite":
        return Finite(obj["points"])
    if kind == "product":
        return Product(descriptor_from_json(obj["first"]),
                       descriptor_from_json(obj["second"]))
    if kind == "union":
        return Union(tuple(descriptor_from_json(p) for p in obj["parts"]))
    if kind == "grid_of":
        return GridOf(descriptor_from_json(obj["inner"]), obj["resolution"])
    raise DomainError(f"unknown set descriptor type {kind!r}")


# ---------------------------------------------------------------------------
# metric and convex-analysis primitives


def hausdorff_distance(a, b):
    """Hausdorff distance between two finite point sets.

    Returns inf when exactly one side is empty (distance to the empty set is
    infinite) and 0 when both are empty.
    """
    A = np.asarray(a, dtype=float)
    B = np.asarray(b, dtype=float)
    if A.size == 0 and B.size == 0:
        return 0.0
    if A.size == 0 or B.size == 0:
        return np.inf
    A, B = as_cloud(A), as_cloud(B)
    if A.shape[1] != B.shape[1]:
        raise DomainError("hausdorff_distance: dimension mismatch")
    D = cdist(A, B)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def support_function(cloud, u, tol=1e-9):
    """Support value max <u, c> over the cloud and the attaining face.

    The face collects every point whose inner product is within
    ``tol * (1 + |value|)`` of the maximum.
    """
    C = as_cloud(cloud)
    if len(C) == 0:
        raise DomainError("support_function: empty cloud")
    uu = np.asarray(u, dtype=float).ravel()
    if uu.size != C.shape[1]:
        raise DomainError("support_function: dimension mismatch")
    prods = C @ uu
    value = float(prods.max())
    face = C[prods >= value - tol * (1.0 + abs(value))]
    return value, face


def is_strictly_convex_in_direction(cloud, u, tol=1e-9):
    """True when the face exposed by ``u`` has diameter at most ``tol``."""
    _, face = support_function(cloud, u, tol)
    if len(face) <= 1:
        return True
    return float(cdist(face, face).max()) <= tol


def horizon(descriptor):
    """Unit directions along which the set escapes to infinity.

    Returns an (k, d) array; bounded sets give an empty array.
    """
    E = descriptor
    if isinstance(E, (Ball, Box, Finite, GridOf)):
        return np.zeros((0, E.dim))
    if isinstance(E, Ray):
        return E.direction.reshape(1, -1)
    if isinstance(E, Cone):
        return E.directions.copy()
    if isinstance(E, Union):
        parts = [horizon(p) for p in E.parts]
        return dedupe_points(np.concatenate(parts, axis=0)) if parts else np.zeros((0, E.dim))
    raise DomainError(f"horizon undefined for descriptor {type(E).__name__}")


@dataclass(frozen=True, eq=False)
class PolytopeVertices:
    """Extreme points of a convex hull; ``reduced`` is False when the input
    dimension exceeded 3 and only deduplication was performed."""

    vertices: np.ndarray
    reduced: bool = True

    def __array__(self, dtype=None, copy=None):
        arr = np.asarray(self.vertices, dtype=dtype)
        return arr.copy() if copy else arr

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


def _affine_frame(pts):
    """Orthonormal basis of the affine span, with the span's rank."""
    center = pts.mean(axis=0)
    rel = pts - center
    _, s, vt = np.linalg.svd(rel, full_matrices=False)
    scale = max(1.0, float(np.abs(pts).max()))
    rank = int((s > 1e-10 * scale).sum())
    return center, vt[:rank], rank


def convex_hull_vertices(points):
    """Extreme points of the convex hull of a cloud.

    Exact for ambient (or affine) dimension up to 3; degenerate clouds are
    reduced inside their affine span.  For dimension above 3 the cloud is
    only deduplicated and flagged unreduced.
    """
    pts = dedupe_points(points)
    if len(pts) == 0:
        raise DomainError("convex_hull_vertices: empty cloud")
    d = pts.shape[1]
    if d > 3:
        return PolytopeVertices(pts, reduced=False)
    if len(pts) <= 2:
        return PolytopeVertices(pts)
    center, frame, rank = _affine_frame(pts)
    if rank == 0:
        return PolytopeVertices(pts[:1])
    coords = (pts - center) @ frame.T
    if rank == 1:
        line = coords[:, 0]
        keep = np.unique([int(np.argmin(line)), int(np.argmax(line))])
        return PolytopeVertices(pts[keep])
    try:
        hull = ConvexHull(coords)
    except QhullError:
        # near-degenerate in the reduced frame: fall back to brute extremity
        return PolytopeVertices(pts[_extreme_mask(pts)])
    keep = np.sort(hull.vertices)
    return PolytopeVertices(pts[keep])


def _extreme_mask(pts):
    """Brute-force extremity test: p is extreme iff not in conv(others)."""
    n = len(pts)
    mask = np.zeros(n, dtype=bool)
    for i in range(n):
        others = np.delete(pts, i, axis=0)
        mask[i] = not point_in_hull(pts[i], others, tol=1e-9)
    return mask


def point_in_hull(point, cloud, tol=1e-9):
    """Membership of a point in the convex hull of a cloud, via a small LP."""
    from scipy.optimize import linprog

    C = as_cloud(cloud)
    p = np.asarray(point, dtype=float).ravel()
    if len(C) == 0:
        return False
    n, d = C.shape
    A_eq = np.vstack([C.T, np.ones(n)])
    b_eq = np.concatenate([p, [1.0]])
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n,
                  method="highs")
    if res.status == 0:
        return True
    if res.status == 2:
        # infeasible up to solver tolerance: accept when p is 'tol'-close
        return bool(cdist(p.reshape(1, -1), C).min() <= tol)
    return False


def grid_points(descriptor, resolution):
    """Deterministic lattice of points inside a bounded descriptor.

    Spacing is extent / resolution per axis; ``Finite`` clouds are returned
    verbatim and unions of bounded parts are concatenated and deduplicated.
    """
    if resolution < 1:
        raise DomainError("resolution must be >= 1")
    S = descriptor
    if isinstance(S, GridOf):
        return grid_points(S.inner, S.resolution)
    if not S.bounded():
        raise DomainError("grid_points requires a bounded descriptor")
    if isinstance(S, Finite):
        return S.points.copy()
    if isinstance(S, Union):
        return dedupe_points(np.concatenate(
            [grid_points(p, resolution) for p in S.parts], axis=0))
    if isinstance(S, Box):
        lo, hi = S.lo, S.hi
    elif isinstance(S, Ball):
        lo = S.center - S.radius
        hi = S.center + S.radius
    else:
        raise DomainError(f"grid_points unsupported for {type(S).__name__}")
    axes = [np.linspace(lo[k], hi[k], resolution + 1) for k in range(lo.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=1)
    if isinstance(S, Ball):
        lattice = lattice[np.linalg.norm(lattice - S.center, axis=1) <= S.radius + 1e-12]
    return lattice


def inflate(descriptor, delta):
    """Minkowski inflation by a closed ball, for Ball and Box descriptors.

    The box case inflates per axis, a box approximation of box + delta*ball
    documented as part of the lattice semantics.
    """
    if delta < 0:
        raise DomainError("inflation must be nonnegative")
    if delta == 0:
        return descriptor
    if isinstance(descriptor, Ball):
        return Ball(descriptor.center, descriptor.radius + delta)
    if isinstance(descriptor, Box):
        return Box(descriptor.lo - delta, descriptor.hi + delta)
    raise DomainError(f"inflate unsupported for {type(descriptor).__name__}")
