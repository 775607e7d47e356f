"""Seeded finite diagnostics for graphical and uniform consistency.

Consistency of estimated transport maps is an asymptotic statement
quantified over all compact/open probes and over possibly unbounded
domains; here every statement is instantiated on explicit finite lattices
and finitely many probes.  Lattice spacing is controlled by the configured
resolution, receding sets are probed along their horizon directions at
geometric radii, and every replication is reproducible from (seed, sample
size, replication index) via a counter-based generator.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.spatial.distance import cdist
from scipy.stats import chi as chi_dist
from scipy.stats import norm as norm_dist

from . import geometry
from .errors import DomainError, StrictConvexityError
from .geometry import (
    Ball, Box, Finite, Product, SetDescriptor, Union, as_cloud,
    convex_hull_vertices, descriptor_from_json, grid_points,
    hausdorff_distance, horizon, inflate, is_strictly_convex_in_direction,
    support_function,
)
from .monotone import (
    PairSet, _bilinear_scale, eval_subdifferential, is_cyclically_monotone,
    rockafellar_potential, subdifferential_contains,
)
from .ranks import center_outward_grid
from .transport import solve_discrete_ot, uniform_measure

RNG_NAME = "philox4x64"
CHECKER_CAP = 1024
RAY_FACTORS = (1.0, 2.0, 4.0)


# ---------------------------------------------------------------------------
# single-valued limit-map oracles


class MapOracle:
    """Single-valued reference map, evaluated on point clouds.

    Construct through one of the factory methods; evaluation is
    deterministic and vectorized.
    """

    def __init__(self, kind, fn, meta):
        self.kind = kind
        self._fn = fn
        self.meta = meta

    def __call__(self, points):
        pts = as_cloud(points)
        return self._fn(pts)

    @classmethod
    def identity(cls):
        return cls("identity", lambda pts: pts.copy(), {})

    @classmethod
    def linear(cls, matrix, shift=None, source_mean=None):
        A = np.asarray(matrix, dtype=float)
        b = np.zeros(A.shape[0]) if shift is None else np.asarray(shift, float)
        m = np.zeros(A.shape[0]) if source_mean is None else np.asarray(source_mean, float)

        def fn(pts):
            return (pts - m) @ A.T + b

        return cls("linear", fn, {"matrix": A, "shift": b, "source_mean": m})

    @classmethod
    def sorted_1d(cls, source_ref, target_ref):
        """Monotone quantile map interpolated through two sorted tables."""
        src = np.asarray(source_ref, dtype=float).ravel()
        tgt = np.asarray(target_ref, dtype=float).ravel()
        if src.size != tgt.size or src.size < 2:
            raise DomainError("sorted_1d oracle needs two equal tables")

        def fn(pts):
            return np.interp(pts[:, 0], src, tgt).reshape(-1, 1)

        return cls("sorted_1d", fn, {"source_ref": src, "target_ref": tgt})

    @classmethod
    def tabulated(cls, points, values, tol=1e-9):
        """Exact lookup on a finite table of probe points."""
        tab_x = as_cloud(points)
        tab_y = as_cloud(values)
        if len(tab_x) != len(tab_y):
            raise DomainError("tabulated oracle tables must align")

        def fn(pts):
            D = cdist(pts, tab_x)
            nearest = D.argmin(axis=1)
            gaps = D[np.arange(len(pts)), nearest]
            bad = gaps > tol * (1.0 + np.abs(pts).max())
            if bad.any():
                raise DomainError("query point not tabulated in the oracle")
            return tab_y[nearest]

        return cls("tabulated", fn, {"points": tab_x, "values": tab_y})


# ---------------------------------------------------------------------------
# finite diagnostics


def fell_check(potential, probe, mode, tol, resolution=8):
    """Hit/miss diagnostic of the graph of d(psi) against a product probe.

    ``probe`` is Product(X-part, Y-part).  miss: every subdifferential over
    the X lattice keeps distance > tol from the Y-part.  hit: some lattice
    point yields a value within tol of the Y-part.
    """
    if not isinstance(probe, Product):
        raise DomainError("fell_check probe must be a Product descriptor")
    if mode not in ("miss", "hit"):
        raise DomainError(f"unknown fell mode {mode!r}")
    if mode == "miss" and not probe.bounded():
        raise DomainError("miss probes must be bounded (compact)")
    xs = grid_points(probe.first, resolution)
    for x in xs:
        verts = np.asarray(eval_subdifferential(potential, x, tol))
        dmin = float(probe.second.distance(verts).min())
        if mode == "miss" and dmin <= tol:
            return False
        if mode == "hit" and dmin <= tol:
            return True
    return mode == "miss"


def local_uniform_sup(potential, oracle, compact_k, resolution, tol=1e-9):
    """sup over the lattice of K of sup over the subdifferential of
    |y - T(x)|, the finite shadow of local uniform convergence."""
    if not compact_k.bounded():
        raise DomainError("local_uniform_sup requires a bounded set")
    xs = grid_points(compact_k, resolution)
    ts = oracle(xs)
    worst = 0.0
    for x, t in zip(xs, ts):
        verts = np.asarray(eval_subdifferential(potential, x, tol))
        worst = max(worst, float(np.linalg.norm(verts - t, axis=1).max()))
    return worst


def image_hausdorff(potential, oracle, compact_k, delta, resolution, tol=1e-9):
    """Hausdorff distance between the lattice image of d(psi) over the
    delta-inflated K and the oracle image of K."""
    if not compact_k.bounded():
        raise DomainError("image_hausdorff requires a bounded set")
    xs_inflated = grid_points(inflate(compact_k, delta), resolution)
    image = np.concatenate([
        np.asarray(eval_subdifferential(potential, x, tol))
        for x in xs_inflated], axis=0)
    target = oracle(grid_points(compact_k, resolution))
    return hausdorff_distance(image, target)


def range_containment_check(potential, range_cloud, tol=1e-9):
    """True when every slope lies in the convex hull of the cloud (within
    a relative tolerance).

    Exact through hull facets for ambient dimension <= 3; higher dimensions
    use support-function comparisons along the cloud's vertex directions
    plus seeded sampled directions, a sound but not exhaustive test.
    """
    C = as_cloud(range_cloud)
    if len(C) == 0:
        raise DomainError("range cloud must be non-empty")
    slopes = potential.slopes
    scale = 1.0 + float(np.abs(C).max())
    d = C.shape[1]
    if d == 1:
        lo, hi = float(C.min()), float(C.max())
        return bool(((slopes[:, 0] >= lo - tol * scale)
                     & (slopes[:, 0] <= hi + tol * scale)).all())
    if d <= 3:
        from scipy.spatial import ConvexHull, QhullError
        try:
            hull = ConvexHull(C)
        except QhullError:
            return _containment_by_directions(slopes, C, tol * scale, seed=0)
        A = hull.equations[:, :-1]
        b = hull.equations[:, -1]
        viol = (slopes @ A.T + b[None, :]).max()
        return bool(viol <= tol * scale)
    return _containment_by_directions(slopes, C, tol * scale, seed=0)


def _containment_by_directions(slopes, cloud, slack, seed):
    d = cloud.shape[1]
    rng = np.random.default_rng(seed)
    dirs = [v / n for v, n in ((c, np.linalg.norm(c)) for c in cloud) if n > 0]
    raw = rng.standard_normal((64 * d, d))
    dirs.extend(raw / np.linalg.norm(raw, axis=1, keepdims=True))
    for u in dirs:
        bound, _ = support_function(cloud, u)
        if slopes @ u > bound + slack:
            return False
    return True


def global_sup_on_receding_set(potential, oracle, receding_set, r_max,
                               resolution, range_vertices, tol=1e-9,
                               strict_tol=1e-9, ray_factors=RAY_FACTORS):
    """Global sup error over an unbounded probe set.

    Requires the closed range (given by its vertex cloud) to be strictly
    convex in every horizon direction of the set; otherwise raises
    StrictConvexityError naming the offending direction.  The probe set is
    the lattice of the bounded part inside the ball of radius r_max, plus
    segments along unbounded parts, plus ray probes at radii
    {r_max, 2 r_max, 4 r_max} along each horizon direction.
    """
    dirs = horizon(receding_set)
    for u in dirs:
        if not is_strictly_convex_in_direction(range_vertices, u, strict_tol):
            raise StrictConvexityError(
                "hypothesis violated: range not strictly convex in a "
                f"receding direction {u.tolist()}", direction=u)
    probes = _receding_probe_points(receding_set, r_max, resolution, dirs,
                                    ray_factors)
    ts = oracle(probes)
    worst = 0.0
    for x, t in zip(probes, ts):
        verts = np.asarray(eval_subdifferential(potential, x, tol))
        worst = max(worst, float(np.linalg.norm(verts - t, axis=1).max()))
    return worst


def _receding_probe_points(E, r_max, resolution, dirs, ray_factors):
    parts = E.parts if isinstance(E, Union) else (E,)
    chunks = []
    for part in parts:
        if part.bounded():
            pts = grid_points(part, resolution)
            chunks.append(pts[np.linalg.norm(pts, axis=1) <= r_max + 1e-12])
        elif isinstance(part, geometry.Ray):
            t = np.linspace(0.0, r_max, resolution + 1)
            chunks.append(part.origin[None, :] + t[:, None] * part.direction[None, :])
        elif isinstance(part, geometry.Cone):
            t = np.linspace(0.0, r_max, resolution + 1)
            for u in part.directions:
                chunks.append(part.apex[None, :] + t[:, None] * u[None, :])
        else:
            raise DomainError(
                f"unsupported receding part {type(part).__name__}")
    for u in dirs:
        radii = np.asarray(ray_factors, dtype=float) * r_max
        chunks.append(radii[:, None] * u[None, :])
    return geometry.dedupe_points(np.concatenate(chunks, axis=0), tol=1e-12)


# ---------------------------------------------------------------------------
# experiment configuration and report


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Declarative description of one seeded consistency experiment.

    ``source`` and ``target`` are family dicts:
      {"family": "gaussian", "cov": [[...]], "mean": [...]} (mean optional)
      {"family": "uniform_box", "lo": [...], "hi": [...]}
      {"family": "uniform_ball", "center": [...], "radius": r}
      {"family": "spherical_uniform_grid"}   (deterministic reference grid)
    """

    dimension: int
    source: dict
    target: dict
    sample_sizes: tuple
    replications: int
    seed: int
    compact_k: SetDescriptor
    resolution: int = 8
    delta: float = 0.1
    tolerance: float = 1e-9
    receding_set: Optional[SetDescriptor] = None
    r_max: float = 10.0
    range_descriptor: Optional[SetDescriptor] = None
    range_facets: int = 64
    certify: str = "auto"
    fell_probes: bool = True

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise DomainError("sample sizes must be strictly increasing")
        if self.replications < 1 or self.resolution < 1:
            raise DomainError("replications and resolution must be >= 1")
        if self.delta < 0:
            raise DomainError("delta must be nonnegative")
        object.__setattr__(self, "sample_sizes", sizes)

    def to_json(self):
        out = {
            "dimension": self.dimension,
            "source": self.source,
            "target": self.target,
            "sample_sizes": list(self.sample_sizes),
            "replications": self.replications,
            "seed": self.seed,
            "compact_k": self.compact_k.to_json(),
            "resolution": self.resolution,
            "delta": self.delta,
            "tolerance": self.tolerance,
            "receding_set": (self.receding_set.to_json()
                             if self.receding_set is not None else None),
            "r_max": self.r_max,
            "range_descriptor": (self.range_descriptor.to_json()
                                 if self.range_descriptor is not None else None),
            "range_facets": self.range_facets,
            "certify": self.certify,
            "fell_probes": self.fell_probes,
        }
        return out

    @classmethod
    def from_json(cls, obj):
        kw = dict(obj)
        kw["sample_sizes"] = tuple(kw["sample_sizes"])
        kw["compact_k"] = descriptor_from_json(kw["compact_k"])
        for key in ("receding_set", "range_descriptor"):
            if kw.get(key) is not None:
                kw[key] = descriptor_from_json(kw[key])
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    header: dict
    rows: tuple
    aggregates: dict

    def to_json(self, include_timing=False):
        rows = []
        for row in self.rows:
            r = dict(row)
            if not include_timing:
                r.pop("wall_time", None)
            rows.append(r)
        return {"header": self.header, "rows": rows,
                "aggregates": self.aggregates}


def average_ranks(values):
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr))
    sorted_vals = arr[order]
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rank_correlation(xs, ys):
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


# ---------------------------------------------------------------------------
# family sampling, oracles and dual warm starts


def _family_key(spec):
    return spec.get("family")


def _grid_shape_for(n):
    n_rings = max(int(round(np.sqrt(n))), 1)
    n_per_ring = max(n // n_rings, 1)
    n_origin = n - n_rings * n_per_ring
    return n_rings, n_per_ring, n_origin


def _draw_sample(spec, n, dim, rng, seed):
    fam = _family_key(spec)
    if fam == "gaussian":
        cov = np.asarray(spec.get("cov", np.eye(dim)), dtype=float)
        mean = np.asarray(spec.get("mean", np.zeros(dim)), dtype=float)
        L = np.linalg.cholesky(cov)
        return rng.standard_normal((n, dim)) @ L.T + mean
    if fam == "uniform_box":
        lo = np.asarray(spec["lo"], dtype=float)
        hi = np.asarray(spec["hi"], dtype=float)
        return lo + rng.random((n, dim)) * (hi - lo)
    if fam == "uniform_ball":
        center = np.asarray(spec.get("center", np.zeros(dim)), dtype=float)
        radius = float(spec.get("radius", 1.0))
        raw = rng.standard_normal((n, dim))
        dirs = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        r = radius * rng.random(n) ** (1.0 / dim)
        return center + dirs * r[:, None]
    if fam == "spherical_uniform_grid":
        n_rings, n_per_ring, n_origin = _grid_shape_for(n)
        grid = center_outward_grid(n_rings, n_per_ring, n_origin, dim, seed=seed)
        return grid.points
    if fam == "uniform_grid":
        # deterministic discretization of uniform[lo, hi]; the reference
        # grid used by one-dimensional rank maps
        if dim != 1:
            raise DomainError("uniform_grid family is one-dimensional")
        lo = float(np.asarray(spec["lo"]).ravel()[0])
        hi = float(np.asarray(spec["hi"]).ravel()[0])
        t = np.arange(1, n + 1) / (n + 1)
        return (lo + t * (hi - lo)).reshape(-1, 1)
    raise DomainError(f"unknown sample family {fam!r}")


def _is_random_family(spec):
    return _family_key(spec) not in ("spherical_uniform_grid", "uniform_grid")


def _quantile_table(spec, dim, n_table=4097):
    """Dense population quantile table for one-dimensional families."""
    fam = _family_key(spec)
    t = np.linspace(0.0, 1.0, n_table + 2)[1:-1]
    if fam in ("uniform_box", "uniform_grid"):
        lo = float(np.asarray(spec["lo"]).ravel()[0])
        hi = float(np.asarray(spec["hi"]).ravel()[0])
        return lo + t * (hi - lo)
    if fam == "gaussian":
        mean = float(np.asarray(spec.get("mean", [0.0])).ravel()[0])
        cov = np.asarray(spec.get("cov", [[1.0]]), dtype=float)
        return mean + np.sqrt(float(cov.ravel()[0])) * norm_dist.ppf(t)
    raise DomainError(f"no closed-form quantiles for family {fam!r}")


def _isotropic_sigma(spec, dim):
    cov = np.asarray(spec.get("cov", np.eye(dim)), dtype=float)
    mean = np.asarray(spec.get("mean", np.zeros(dim)), dtype=float)
    sigma2 = cov[0, 0]
    if (np.abs(cov - sigma2 * np.eye(dim)).max() > 1e-12 * max(1.0, sigma2)
            or np.abs(mean).max() > 0):
        raise DomainError("closed-form center-outward oracle needs a centred "
                          "isotropic Gaussian source")
    return float(np.sqrt(sigma2))


def _gaussian_radial_map(points, sigma, dim):
    """Center-outward distribution function of N(0, sigma^2 I)."""
    pts = as_cloud(points, dim)
    r = np.linalg.norm(pts, axis=1)
    out = np.zeros_like(pts)
    pos = r > 0
    factor = chi_dist.cdf(r[pos] / sigma, df=dim) / r[pos]
    out[pos] = pts[pos] * factor[:, None]
    return out


def _oracle_for(cfg, probe_points):
    src, tgt = cfg.source, cfg.target
    d = cfg.dimension
    if src == tgt:
        return MapOracle.identity()
    if d == 1:
        qs = _quantile_table(src, d)
        qt = _quantile_table(tgt, d)
        return MapOracle.sorted_1d(qs, qt)
    if _family_key(src) == "gaussian" and _family_key(tgt) == "gaussian":
        cov_s = np.asarray(src.get("cov", np.eye(d)), dtype=float)
        cov_t = np.asarray(tgt.get("cov", np.eye(d)), dtype=float)
        mean_s = np.asarray(src.get("mean", np.zeros(d)), dtype=float)
        mean_t = np.asarray(tgt.get("mean", np.zeros(d)), dtype=float)
        from .transport import gaussian_brenier
        A = gaussian_brenier(cov_s, cov_t)
        return MapOracle.linear(A, shift=mean_t, source_mean=mean_s)
    if (_family_key(src) == "gaussian"
            and _family_key(tgt) == "spherical_uniform_grid"):
        sigma = _isotropic_sigma(src, d)
        values = _gaussian_radial_map(probe_points, sigma, d)
        return MapOracle.tabulated(probe_points, values)
    raise DomainError("no closed-form limit map for this family pair")


def _dual_hint_for(cfg, target_points):
    """Target-side Kantorovich potential of the population problem.

    v(y) = |y|^2 - 2 psi*(y) with psi the population Brenier potential; an
    approximation only warms up the solver and cannot change the optimum.
    """
    src, tgt = cfg.source, cfg.target
    d = cfg.dimension
    y = as_cloud(target_points, d)
    ynorm2 = (y * y).sum(axis=1)
    if src == tgt:
        return np.zeros(len(y))
    if d == 1:
        qs = _quantile_table(src, d)
        qt = _quantile_table(tgt, d)
        # T maps qs[k] to qt[k], so qs is T^{-1} tabulated on the qt grid
        conj = cumulative_trapezoid(qs, qt, initial=0.0)
        return ynorm2 - 2.0 * np.interp(y[:, 0], qt, conj)
    if _family_key(src) == "gaussian" and _family_key(tgt) == "gaussian":
        from .transport import gaussian_brenier
        cov_s = np.asarray(src.get("cov", np.eye(d)), dtype=float)
        cov_t = np.asarray(tgt.get("cov", np.eye(d)), dtype=float)
        mean_s = np.asarray(src.get("mean", np.zeros(d)), dtype=float)
        mean_t = np.asarray(tgt.get("mean", np.zeros(d)), dtype=float)
        A = gaussian_brenier(cov_s, cov_t)
        b = mean_t - A @ mean_s
        Ainv = np.linalg.inv(A)
        rel = y - b
        return ynorm2 - np.einsum("ij,ij->i", rel @ Ainv, rel)
    if (_family_key(src) == "gaussian"
            and _family_key(tgt) == "spherical_uniform_grid"):
        sigma = _isotropic_sigma(src, d)
        s = np.linalg.norm(y, axis=1)
        smax = min(float(s.max()) + 1e-6, 1.0 - 1e-9)
        ts = np.linspace(0.0, smax, 4097)
        integrand = sigma * chi_dist.ppf(ts, df=d)
        conj = cumulative_trapezoid(integrand, ts, initial=0.0)
        return ynorm2 - 2.0 * np.interp(s, ts, conj)
    return None


def _range_cloud(cfg):
    """Vertex-cloud discretization of the configured closed range."""
    desc = cfg.range_descriptor
    if desc is None:
        return None
    if isinstance(desc, Ball):
        if cfg.dimension != 2:
            raise DomainError("ball range discretization implemented for d=2")
        ang = 2.0 * np.pi * np.arange(cfg.range_facets) / cfg.range_facets
        ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return desc.center[None, :] + desc.radius * ring
    if isinstance(desc, Box):
        return grid_points(desc, 1)
    if isinstance(desc, Finite):
        return desc.points.copy()
    raise DomainError(
        f"unsupported range descriptor {type(desc).__name__}")


def _probe_points(cfg):
    """All domain points any diagnostic may query, for oracle tabulation."""
    chunks = [grid_points(cfg.compact_k, cfg.resolution),
              grid_points(inflate(cfg.compact_k, cfg.delta), cfg.resolution)]
    if cfg.receding_set is not None:
        dirs = horizon(cfg.receding_set)
        chunks.append(_receding_probe_points(
            cfg.receding_set, cfg.r_max, cfg.resolution, dirs, RAY_FACTORS))
    return geometry.dedupe_points(np.concatenate(chunks, axis=0), tol=1e-12)


# ---------------------------------------------------------------------------
# the experiment runner


def _replication_rng(seed, n, rep):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence([int(seed), int(n), int(rep)])))


def _default_fell_checks(potential, oracle, cfg, sup_error):
    """Default probes derived from the measured sup error.

    miss: a discrete shell at distance 3*sup_error around the oracle image
    of K must stay clear of the lattice subdifferentials at tolerance
    sup_error.  hit: a ball of radius 2*sup_error around the oracle value
    at one lattice point must be reached.
    """
    if sup_error <= 0:
        return None, None
    xs = grid_points(cfg.compact_k, cfg.resolution)
    image = oracle(xs)
    hull = np.asarray(convex_hull_vertices(image))
    d = image.shape[1]
    eye = np.eye(d)
    offsets = np.concatenate([eye, -eye], axis=0)
    if d == 2:
        diag = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]]) / np.sqrt(2)
        offsets = np.concatenate([offsets, diag], axis=0)
    shell = (hull[:, None, :] + 3.0 * sup_error * offsets[None, :, :]).reshape(-1, d)
    keep = Finite(image).distance(shell) >= 2.9 * sup_error
    shell = shell[keep]
    miss = None
    if len(shell):
        probe = Product(Finite(xs), Finite(shell))
        miss = fell_check(potential, probe, "miss", tol=sup_error,
                          resolution=cfg.resolution)
    x0 = xs[len(xs) // 2]
    t0 = oracle(x0.reshape(1, -1))[0]
    hit_probe = Product(Finite(x0.reshape(1, -1)),
                        Ball(t0, max(2.0 * sup_error, 1e-9)))
    hit = fell_check(potential, hit_probe, "hit", tol=1e-9,
                     resolution=cfg.resolution)
    return miss, hit


def run_single_replication(cfg, n, rep, oracle=None, range_cloud=None,
                           probe_points=None):
    """One (n, replication) row; reproducible from (seed, n, rep) alone."""
    t_start = time.perf_counter()
    if probe_points is None:
        probe_points = _probe_points(cfg)
    if oracle is None:
        oracle = _oracle_for(cfg, probe_points)
    if range_cloud is None:
        range_cloud = _range_cloud(cfg)
    rng = _replication_rng(cfg.seed, n, rep)
    d = cfg.dimension
    src_pts = _draw_sample(cfg.source, n, d, rng, cfg.seed)
    tgt_pts = _draw_sample(cfg.target, n, d, rng, cfg.seed)
    P = uniform_measure(src_pts)
    Q = uniform_measure(tgt_pts)
    hint = _dual_hint_for(cfg, tgt_pts)
    coupling = solve_discrete_ot(P, Q, dual_hint_target=hint)
    rows, cols = coupling.support_indices()
    support = PairSet(P.points[rows], Q.points[cols])

    # certification: checker for desk-scale rows, potential-containment
    # certificate always (it is the Rockafellar equivalence at tolerance)
    certificates = []
    use_checker = cfg.certify == "checker" or (
        cfg.certify == "auto" and len(support) <= CHECKER_CAP)
    if use_checker:
        verdict = is_cyclically_monotone(support, cfg.tolerance)
        if not verdict.holds:
            raise RuntimeError(
                "solver produced a non-cyclically-monotone support "
                f"(n={n}, rep={rep}, deficit={verdict.deficit}); solver bug")
        certificates.append("checker")
    pair_hint = None
    if coupling.source_potential is not None:
        u = coupling.source_potential[rows]
        pair_hint = 0.5 * ((support.x * support.x).sum(axis=1) - u)
    potential = rockafellar_potential(support, base_index=0,
                                      tol=cfg.tolerance,
                                      reweight_hint=pair_hint)
    gap = subdifferential_contains(potential, support)
    if gap > cfg.tolerance * _bilinear_scale(support):
        raise RuntimeError(
            f"containment certificate failed (gap={gap}); solver bug")
    certificates.append("potential")

    sup_error = local_uniform_sup(potential, oracle, cfg.compact_k,
                                  cfg.resolution, cfg.tolerance)
    haus0 = image_hausdorff(potential, oracle, cfg.compact_k, 0.0,
                            cfg.resolution, cfg.tolerance)
    haus_delta = image_hausdorff(potential, oracle, cfg.compact_k, cfg.delta,
                                 cfg.resolution, cfg.tolerance)
    global_sup = None
    if cfg.receding_set is not None:
        if range_cloud is None:
            raise DomainError("receding diagnostics need a range descriptor")
        global_sup = global_sup_on_receding_set(
            potential, oracle, cfg.receding_set, cfg.r_max, cfg.resolution,
            range_cloud, cfg.tolerance)
    contained = None
    if range_cloud is not None:
        contained = range_containment_check(potential, range_cloud,
                                            cfg.tolerance)
    fell_miss = fell_hit = None
    if cfg.fell_probes:
        fell_miss, fell_hit = _default_fell_checks(potential, oracle, cfg,
                                                   sup_error)
    return {
        "n": int(n),
        "rep": int(rep),
        "sup_error_k": sup_error,
        "hausdorff_k": haus0,
        "hausdorff_k_delta": haus_delta,
        "global_sup_e": global_sup,
        "range_contained": contained,
        "fell_miss": fell_miss,
        "fell_hit": fell_hit,
        "monotone_certified": True,
        "certificate": "+".join(certificates),
        "wall_time": time.perf_counter() - t_start,
    }


def _thread_budget():
    raw = os.environ.get("MTL_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        return 1
    if k == 0:
        return os.cpu_count() or 1
    return max(k, 1)


def run_consistency_experiment(cfg):
    """Run every (n, replication) task and aggregate medians and the trend.

    Tasks are independent; with MTL_THREADS > 1 they run in a process pool
    and are merged by (n, rep), so output is order-independent and
    deterministic for a fixed seed.
    """
    probe_points = _probe_points(cfg)
    oracle = _oracle_for(cfg, probe_points)
    range_cloud = _range_cloud(cfg)
    tasks = [(n, rep) for n in cfg.sample_sizes
             for rep in range(cfg.replications)]
    workers = _thread_budget()
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replication_worker,
                                 [(cfg, n, rep) for n, rep in tasks]))
    else:
        rows = [run_single_replication(cfg, n, rep, oracle, range_cloud,
                                       probe_points)
                for n, rep in tasks]
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    per_n = {}
    for n in cfg.sample_sizes:
        sub = [r for r in rows if r["n"] == n]
        entry = {}
        for key in ("sup_error_k", "hausdorff_k", "hausdorff_k_delta",
                    "global_sup_e"):
            vals = [r[key] for r in sub if r[key] is not None]
            entry["median_" + key] = float(np.median(vals)) if vals else None
        entry["all_certified"] = all(r["monotone_certified"] for r in sub)
        per_n[str(n)] = entry
    medians = [per_n[str(n)]["median_sup_error_k"] for n in cfg.sample_sizes]
    trend = spearman_rank_correlation(
        np.log(np.asarray(cfg.sample_sizes, dtype=float)), medians)
    header = {
        "config": cfg.to_json(),
        "rng": RNG_NAME,
        "stream": "seed_sequence([seed, n, rep])",
        "version": _package_version(),
    }
    aggregates = {"per_n": per_n, "spearman_logn_sup_error": trend}
    return ExperimentReport(header, tuple(rows), aggregates)


def _replication_worker(args):
    cfg, n, rep = args
    return run_single_replication(cfg, n, rep)


def _package_version():
    from . import __version__
    return __version__
