import numpy as np
import pytest

from motlib.errors import DomainError
from motlib.monotone import PairSet, is_cyclically_monotone
from motlib.ranks import center_outward_grid, center_outward_ranks, quantile_contour
from motlib.transport import brute_force_ot, uniform_measure


class TestGrid:
    def test_shape_2d(self):
        g = center_outward_grid(2, 4, 0, dim=2)
        assert len(g) == 8
        radii = np.linalg.norm(g.points, axis=1)
        np.testing.assert_allclose(np.unique(np.round(radii, 12)),
                                   [1 / 3, 2 / 3])

    def test_first_ring_angles(self):
        g = center_outward_grid(2, 4, 0, dim=2)
        ring1 = g.points[g.ring_slice(1)]
        ang = np.mod(np.arctan2(ring1[:, 1], ring1[:, 0]), 2 * np.pi)
        np.testing.assert_allclose(np.sort(ang),
                                   [0.0, np.pi / 2, np.pi, 3 * np.pi / 2],
                                   atol=1e-12)

    def test_all_points_inside_ball(self):
        g = center_outward_grid(5, 12, 3, dim=2, seed=1)
        assert (np.linalg.norm(g.points, axis=1) < 1.0).all()

    def test_mean_near_origin(self):
        g = center_outward_grid(6, 16, 0, dim=2)
        assert np.linalg.norm(g.points.mean(axis=0)) < 1.0 / np.sqrt(len(g))

    def test_origin_copies_distinct(self):
        g = center_outward_grid(1, 2, 3, dim=2)
        origin = g.points[2:]
        assert len(np.unique(origin[:, 0])) == 3

    def test_seeded_3d_deterministic(self):
        a = center_outward_grid(2, 5, 0, dim=3, seed=42)
        b = center_outward_grid(2, 5, 0, dim=3, seed=42)
        np.testing.assert_array_equal(a.points, b.points)
        c = center_outward_grid(2, 5, 0, dim=3, seed=43)
        assert not np.array_equal(a.points, c.points)

    def test_d1_rejected(self):
        with pytest.raises(DomainError):
            center_outward_grid(2, 4, 0, dim=1)


class TestRanks:
    def test_grid_maps_to_itself(self):
        g = center_outward_grid(2, 4, 0, dim=2)
        ra = center_outward_ranks(g.points, g)
        np.testing.assert_array_equal(ra.assignment, np.arange(len(g)))

    @pytest.mark.parametrize("seed", range(10))
    def test_bijection_and_monotone(self, seed):
        rng = np.random.default_rng(seed)
        g = center_outward_grid(2, 4, 0, dim=2)
        sample = rng.normal(size=(len(g), 2))
        ra = center_outward_ranks(sample, g)
        assert sorted(ra.assignment.tolist()) == list(range(len(g)))
        pairs = PairSet(sample, g.points[ra.assignment])
        assert is_cyclically_monotone(pairs).holds

    @pytest.mark.parametrize("seed", range(5))
    def test_rotated_sample_conjugation(self, seed):
        # ranks of a rotated grid: the two conjugated instances share their
        # optimal cost and both supports certify; assignments may differ on
        # ties so exact equality is not asserted
        rng = np.random.default_rng(300 + seed)
        g = center_outward_grid(2, 6, 0, dim=2)
        theta = rng.uniform(0, 2 * np.pi)
        U = np.array([[np.cos(theta), -np.sin(theta)],
                      [np.sin(theta), np.cos(theta)]])
        ra = center_outward_ranks(g.points @ U.T, g)
        rb = center_outward_ranks(g.points, type(g)(
            g.n_rings, g.n_per_ring, g.n_origin, g.seed, g.points @ U.T))
        cost_a = float(((g.points @ U.T - g.points[ra.assignment]) ** 2).sum())
        cost_b = float(((g.points - (g.points @ U.T)[rb.assignment]) ** 2).sum())
        assert cost_a == pytest.approx(cost_b, rel=1e-9)
        for ranked, pts, tgt in ((ra, g.points @ U.T, g.points),
                                 (rb, g.points, g.points @ U.T)):
            pairs = PairSet(pts, tgt[ranked.assignment])
            assert is_cyclically_monotone(pairs).holds

    @pytest.mark.parametrize("seed", range(5))
    def test_cost_matches_brute_force(self, seed):
        rng = np.random.default_rng(100 + seed)
        g = center_outward_grid(2, 4, 0, dim=2)
        sample = rng.normal(size=(8, 2))
        ra = center_outward_ranks(sample, g)
        cost = float(((sample - g.points[ra.assignment]) ** 2).sum()) / 8
        ref = brute_force_ot(uniform_measure(sample),
                             uniform_measure(g.points)).transport_cost()
        assert cost == pytest.approx(ref, rel=1e-9)

    def test_size_mismatch(self):
        g = center_outward_grid(2, 4, 0, dim=2)
        with pytest.raises(DomainError):
            center_outward_ranks(np.zeros((3, 2)), g)


class TestContours:
    def test_grid_contour_is_ring(self):
        g = center_outward_grid(3, 6, 0, dim=2)
        ra = center_outward_ranks(g.points, g)
        contour = quantile_contour(ra, 2)
        ring = g.points[g.ring_slice(2)]
        got = {tuple(np.round(p, 12)) for p in contour}
        want = {tuple(np.round(p, 12)) for p in ring}
        assert got == want

    def test_contour_size_is_ring_size(self):
        rng = np.random.default_rng(3)
        g = center_outward_grid(2, 4, 0, dim=2)
        ra = center_outward_ranks(rng.normal(size=(8, 2)), g)
        for k in (1, 2):
            assert len(quantile_contour(ra, k)) == 4

    def test_affine_grid_sample(self):
        # an SPD image of the grid matches ring-for-ring up to ties
        rng = np.random.default_rng(4)
        g = center_outward_grid(2, 8, 0, dim=2)
        A = np.array([[2.0, 0.3], [0.3, 1.0]])
        sample = g.points @ A.T
        ra = center_outward_ranks(sample, g)
        contour = quantile_contour(ra, 2)
        ring_img = g.points[g.ring_slice(2)] @ A.T
        got = {tuple(np.round(p, 9)) for p in contour}
        want = {tuple(np.round(p, 9)) for p in ring_img}
        assert got == want

    def test_ring_out_of_range(self):
        g = center_outward_grid(2, 4, 0, dim=2)
        ra = center_outward_ranks(g.points, g)
        with pytest.raises(DomainError):
            quantile_contour(ra, 3)

    @pytest.mark.parametrize("seed", range(5))
    def test_nested_contours_under_spd_map(self, seed):
        rng = np.random.default_rng(200 + seed)
        g = center_outward_grid(3, 8, 0, dim=2)
        M = rng.normal(size=(2, 2))
        A = M @ M.T + 2 * np.eye(2)
        sample = g.points @ A.T
        ra = center_outward_ranks(sample, g)
        Ainv = np.linalg.inv(A)
        prev_max = 0.0
        for k in (1, 2, 3):
            contour = quantile_contour(ra, k)
            norms = np.linalg.norm(contour @ Ainv.T, axis=1)
            assert norms.min() > prev_max - 1e-12
            prev_max = norms.max()
