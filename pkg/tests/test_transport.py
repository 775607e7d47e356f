import numpy as np
import pytest

from motlib.errors import DomainError, MarginError
from motlib.monotone import brute_force_cycle_oracle, is_cyclically_monotone
from motlib.transport import (
    Coupling, brute_force_ot, coupling_support, gaussian_brenier,
    make_discrete_measure, margins_of, solve_discrete_ot, sorted_1d_ot,
    uniform_measure,
)


def measure_1d(xs, weights=None):
    pts = np.asarray(xs, float).reshape(-1, 1)
    if weights is None:
        return uniform_measure(pts)
    return make_discrete_measure(pts, weights)


def random_uniform_pair(rng, n, d):
    P = uniform_measure(rng.normal(size=(n, d)))
    Q = uniform_measure(rng.normal(size=(n, d)) + rng.normal(size=d))
    return P, Q


class TestDiscreteMeasure:
    def test_valid(self):
        m = make_discrete_measure([[0.0], [1.0]], [0.5, 0.5])
        assert m.is_uniform()

    def test_bad_mass(self):
        with pytest.raises(DomainError):
            make_discrete_measure([[0.0], [1.0]], [0.5, 0.6])

    def test_nonpositive_weight(self):
        with pytest.raises(DomainError):
            make_discrete_measure([[0.0], [1.0]], [1.0, 0.0])

    def test_duplicate_points(self):
        with pytest.raises(DomainError):
            make_discrete_measure([[0.0], [0.0]], [0.5, 0.5])

    def test_empirical(self):
        rng = np.random.default_rng(0)
        m = uniform_measure(rng.normal(size=(17, 3)))
        assert len(m) == 17
        assert m.weights.sum() == pytest.approx(1.0)


class TestSolveDiscreteOT:
    def test_identity_coupling(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        P = uniform_measure(pts)
        pi = solve_discrete_ot(P, P)
        assert pi.transport_cost() == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_array_equal(pi.rows, pi.cols)

    def test_two_point_line(self):
        # brute force over both permutations: monotone 8/2 beats crossed 10/2
        P = measure_1d([0.0, 1.0])
        Q = measure_1d([2.0, 3.0])
        pi = solve_discrete_ot(P, Q)
        assert pi.transport_cost() == pytest.approx(4.0)
        support = coupling_support(pi)
        np.testing.assert_allclose(support.x.ravel(), [0.0, 1.0])
        np.testing.assert_allclose(support.y.ravel(), [2.0, 3.0])

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        d = 2
        P, Q = random_uniform_pair(rng, n, d)
        pi = solve_discrete_ot(P, Q)
        ref = brute_force_ot(P, Q)
        assert pi.transport_cost() == pytest.approx(ref.transport_cost(), rel=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_simplex_route_agrees(self, seed):
        rng = np.random.default_rng(50 + seed)
        n = int(rng.integers(2, 8))
        P, Q = random_uniform_pair(rng, n, 2)
        a = solve_discrete_ot(P, Q, method="assignment")
        s = solve_discrete_ot(P, Q, method="simplex")
        assert s.transport_cost() == pytest.approx(a.transport_cost(), rel=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_weighted_instances_against_lp(self, seed):
        from scipy.optimize import linprog
        rng = np.random.default_rng(100 + seed)
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        P = make_discrete_measure(rng.normal(size=(m, 2)),
                                  rng.dirichlet(np.ones(m) * 3))
        Q = make_discrete_measure(rng.normal(size=(n, 2)),
                                  rng.dirichlet(np.ones(n) * 3))
        pi = solve_discrete_ot(P, Q)
        # independent LP oracle
        diff = P.points[:, None, :] - Q.points[None, :, :]
        C = (diff * diff).sum(axis=2)
        A_eq = []
        for i in range(m):
            row = np.zeros((m, n)); row[i, :] = 1
            A_eq.append(row.ravel())
        for j in range(n):
            col = np.zeros((m, n)); col[:, j] = 1
            A_eq.append(col.ravel())
        res = linprog(C.ravel(), A_eq=np.array(A_eq)[:-1],
                      b_eq=np.concatenate([P.weights, Q.weights])[:-1],
                      bounds=[(0, None)] * (m * n), method="highs")
        assert res.status == 0
        assert pi.transport_cost() == pytest.approx(res.fun, rel=1e-8, abs=1e-10)
        # margins hold
        margins_of(pi)

    def test_dual_certificate(self):
        rng = np.random.default_rng(7)
        P, Q = random_uniform_pair(rng, 40, 2)
        pi = solve_discrete_ot(P, Q, dual_hint_target=np.zeros(40))
        from scipy.spatial.distance import cdist
        C = cdist(P.points, Q.points, "sqeuclidean")
        slack = C - pi.source_potential[:, None] - pi.target_potential[None, :]
        assert slack.min() > -1e-9
        tight = C[pi.rows, pi.cols] - pi.source_potential[pi.rows] - pi.target_potential[pi.cols]
        assert np.abs(tight).max() < 1e-9

    def test_dimension_mismatch(self):
        P = uniform_measure([[0.0, 0.0]])
        Q = uniform_measure([[0.0]])
        with pytest.raises(DomainError):
            solve_discrete_ot(P, Q)

    @pytest.mark.parametrize("seed", range(10))
    def test_warm_solver_exact_under_adversarial_hints(self, seed):
        # hint quality affects only the search, never the minimizer
        from scipy.optimize import linear_sum_assignment
        from scipy.spatial.distance import cdist
        rng = np.random.default_rng(800 + seed)
        n = int(rng.integers(5, 60))
        P, Q = random_uniform_pair(rng, n, int(rng.integers(1, 4)))
        hint = rng.normal(size=n) * 10.0 ** rng.integers(-3, 4)
        pi = solve_discrete_ot(P, Q, dual_hint_target=hint)
        C = cdist(P.points, Q.points, "sqeuclidean")
        r, c = linear_sum_assignment(C)
        assert pi.transport_cost() == pytest.approx(
            float(C[r, c].sum()) / n, rel=1e-12, abs=1e-12)
        slack = C - pi.source_potential[:, None] - pi.target_potential[None, :]
        assert slack.min() > -1e-8


class TestKnottSmith:
    @pytest.mark.parametrize("seed", range(15))
    def test_optimal_support_cyclically_monotone(self, seed):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(2, 8))
        P, Q = random_uniform_pair(rng, n, 2)
        support = coupling_support(solve_discrete_ot(P, Q))
        assert is_cyclically_monotone(support).holds
        assert brute_force_cycle_oracle(support)

    @pytest.mark.parametrize("seed", range(15))
    def test_suboptimal_permutations_fail(self, seed):
        import itertools
        rng = np.random.default_rng(300 + seed)
        n = int(rng.integers(2, 6))
        P, Q = random_uniform_pair(rng, n, 2)
        opt = solve_discrete_ot(P, Q).transport_cost()
        diff = P.points[:, None, :] - Q.points[None, :, :]
        C = (diff * diff).sum(axis=2)
        scale = 1.0 + float(np.abs(C).max())
        for perm in itertools.permutations(range(n)):
            cost = float(C[range(n), perm].sum()) / n
            pairs = coupling_support(Coupling(
                P, Q, np.arange(n), np.array(perm), np.full(n, 1.0 / n)))
            if cost > opt + 1e-9 * scale:
                assert not is_cyclically_monotone(pairs).holds


class TestMargins:
    def test_diagonal_margins(self):
        P = uniform_measure([[0.0], [1.0]])
        pi = solve_discrete_ot(P, P)
        mp, mq = margins_of(pi)
        np.testing.assert_allclose(mp.weights, P.weights)
        np.testing.assert_allclose(mq.weights, P.weights)

    def test_perturbed_plan_detected(self):
        rng = np.random.default_rng(1)
        P, Q = random_uniform_pair(rng, 5, 2)
        pi = solve_discrete_ot(P, Q)
        bad = Coupling(P, Q, pi.rows, pi.cols, pi.mass + 1e-6)
        with pytest.raises(MarginError):
            margins_of(bad)

    def test_support_of_margin(self):
        # first coordinates of the support equal the source's mass points
        rng = np.random.default_rng(2)
        P, Q = random_uniform_pair(rng, 6, 2)
        support = coupling_support(solve_discrete_ot(P, Q))
        got = {tuple(np.round(p, 9)) for p in support.x}
        want = {tuple(np.round(p, 9)) for p in P.points}
        assert got == want


class TestTranslationEquivariance:
    @pytest.mark.parametrize("seed", range(5))
    def test_shifted_target(self, seed):
        rng = np.random.default_rng(400 + seed)
        n = 6
        P, Q = random_uniform_pair(rng, n, 2)
        shift = rng.normal(size=2)
        Q2 = uniform_measure(Q.points + shift)
        pi1 = solve_discrete_ot(P, Q)
        pi2 = solve_discrete_ot(P, Q2)
        np.testing.assert_array_equal(pi1.cols, pi2.cols)


class TestGaussianBrenier:
    def test_identity(self):
        A = gaussian_brenier(np.eye(2), np.eye(2))
        np.testing.assert_allclose(A, np.eye(2), atol=1e-10)

    def test_diagonal(self):
        A = gaussian_brenier(np.eye(2), np.diag([4.0, 1.0]))
        np.testing.assert_allclose(A, np.diag([2.0, 1.0]), atol=1e-8)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_spd_pairs(self, seed):
        rng = np.random.default_rng(500 + seed)
        d = int(rng.integers(2, 5))
        M1 = rng.normal(size=(d, d)); S1 = M1 @ M1.T + 0.5 * np.eye(d)
        M2 = rng.normal(size=(d, d)); S2 = M2 @ M2.T + 0.5 * np.eye(d)
        A = gaussian_brenier(S1, S2)
        np.testing.assert_allclose(A, A.T, atol=1e-10)
        np.testing.assert_allclose(A @ S1 @ A, S2, atol=1e-8 * max(1, np.abs(S2).max()))
        X = rng.normal(size=(20, d))
        from motlib.monotone import PairSet
        assert is_cyclically_monotone(PairSet(X, X @ A.T)).holds

    def test_rejects_non_spd(self):
        with pytest.raises(DomainError):
            gaussian_brenier(np.diag([1.0, -1.0]), np.eye(2))


class TestSorted1D:
    def test_two_point_example(self):
        P = measure_1d([0.0, 1.0])
        Q = measure_1d([2.0, 3.0])
        pi = sorted_1d_ot(P, Q)
        assert pi.transport_cost() == pytest.approx(4.0)

    def test_identity_after_sorting(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(9, 1))
        P = uniform_measure(pts)
        pi = sorted_1d_ot(P, P)
        np.testing.assert_array_equal(pi.rows, pi.cols)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_solver(self, seed):
        rng = np.random.default_rng(600 + seed)
        n = 50
        P = uniform_measure(rng.normal(size=(n, 1)))
        Q = uniform_measure(rng.uniform(size=(n, 1)) * 3)
        assert sorted_1d_ot(P, Q).transport_cost() == pytest.approx(
            solve_discrete_ot(P, Q).transport_cost(), rel=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_weighted_matches_simplex(self, seed):
        rng = np.random.default_rng(700 + seed)
        m, n = 6, 9
        P = make_discrete_measure(rng.normal(size=(m, 1)), rng.dirichlet(np.ones(m)))
        Q = make_discrete_measure(rng.normal(size=(n, 1)), rng.dirichlet(np.ones(n)))
        assert sorted_1d_ot(P, Q).transport_cost() == pytest.approx(
            solve_discrete_ot(P, Q, method="simplex").transport_cost(), rel=1e-9)

    def test_wrong_dimension(self):
        P = uniform_measure([[0.0, 1.0]])
        with pytest.raises(DomainError):
            sorted_1d_ot(P, P)


class TestBruteForce:
    def test_single_point(self):
        P = measure_1d([0.0])
        Q = measure_1d([5.0])
        pi = brute_force_ot(P, Q)
        assert pi.transport_cost() == pytest.approx(25.0)

    def test_minimum_over_permutations(self):
        import itertools
        rng = np.random.default_rng(4)
        n = 5
        P, Q = random_uniform_pair(rng, n, 2)
        best = brute_force_ot(P, Q).transport_cost()
        diff = P.points[:, None, :] - Q.points[None, :, :]
        C = (diff * diff).sum(axis=2)
        for perm in itertools.permutations(range(n)):
            assert best <= float(C[range(n), perm].sum()) / n + 1e-12

    def test_size_cap(self):
        rng = np.random.default_rng(5)
        P, Q = random_uniform_pair(rng, 9, 2)
        with pytest.raises(DomainError):
            brute_force_ot(P, Q)
