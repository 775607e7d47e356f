"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[acceptance] criterion NN (...): PASS/FAIL` line; run
with ``pytest -s tests/test_acceptance.py`` to see them live.  The heavy
Gaussian scenario (criteria 6, 7, 11) is computed once per session and
reused; criterion 11 necessarily repeats it in full.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from gen_helpers import chained_pairs, mixed_pairset

from motlib.convergence import ExperimentConfig, run_consistency_experiment
from motlib.geometry import Ball, Box, Cone, Union, hausdorff_distance
from motlib.monotone import (
    PairSet, brute_force_cycle_oracle, eval_subdifferential,
    is_cyclically_monotone, rockafellar_potential,
)
from motlib.ranks import center_outward_grid, center_outward_ranks
from motlib.serialize import dumps_canonical
from motlib.transport import (
    Coupling, brute_force_ot, coupling_support, solve_discrete_ot,
    sorted_1d_ot, uniform_measure,
)


@contextmanager
def criterion(num, label):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {num:2d} ({label}): FAIL", flush=True)
        raise
    print(f"[acceptance] criterion {num:2d} ({label}): PASS", flush=True)


def small_uniform_instances(count=100, seed=20240817):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 8))
        P = uniform_measure(rng.normal(size=(n, 2)))
        Q = uniform_measure(rng.normal(size=(n, 2)) + rng.normal(size=2))
        out.append((P, Q))
    return out


@pytest.fixture(scope="module")
def instances():
    return small_uniform_instances()


def gaussian_scenario_config():
    return ExperimentConfig(
        dimension=2,
        source={"family": "gaussian", "cov": [[1.0, 0.0], [0.0, 1.0]]},
        target={"family": "gaussian", "cov": [[4.0, 0.0], [0.0, 1.0]]},
        sample_sizes=(64, 256, 1024, 4096),
        replications=20,
        seed=20240817,
        compact_k=Box([-1.0, -1.0], [1.0, 1.0]),
        resolution=8,
        delta=0.1,
    )


@pytest.fixture(scope="module")
def gaussian_scenario():
    cfg = gaussian_scenario_config()
    t0 = time.perf_counter()
    report = run_consistency_experiment(cfg)
    elapsed = time.perf_counter() - t0
    print(f"[acceptance] gaussian scenario wall time: {elapsed:.1f}s "
          f"(target 300s)", flush=True)
    return cfg, report, elapsed


def test_criterion_01_oracle_equivalence(instances):
    with criterion(1, "solver equals brute-force oracle"):
        t0 = time.perf_counter()
        for P, Q in instances:
            got = solve_discrete_ot(P, Q).transport_cost()
            ref = brute_force_ot(P, Q).transport_cost()
            assert got == pytest.approx(ref, rel=1e-9, abs=1e-12)
        assert time.perf_counter() - t0 < 30.0


def test_criterion_02_knott_smith_both_directions(instances):
    with criterion(2, "optimality iff cyclically monotone support"):
        for P, Q in instances:
            n = len(P)
            pi = solve_discrete_ot(P, Q)
            assert is_cyclically_monotone(coupling_support(pi)).holds
            diff = P.points[:, None, :] - Q.points[None, :, :]
            C = (diff * diff).sum(axis=2)
            opt = pi.transport_cost()
            scale = 1.0 + float(C.max())
            for perm in itertools.permutations(range(n)):
                cost = float(C[range(n), perm].sum()) / n
                if cost > opt + 1e-9 * scale:
                    sub = coupling_support(Coupling(
                        P, Q, np.arange(n), np.array(perm),
                        np.full(n, 1.0 / n)))
                    assert not is_cyclically_monotone(sub).holds


def test_criterion_03_checker_soundness():
    with criterion(3, "checker agrees with cycle-enumeration oracle"):
        rng = np.random.default_rng(11)
        for _ in range(100):
            S = mixed_pairset(rng, max_size=8)
            assert is_cyclically_monotone(S).holds == brute_force_cycle_oracle(S)


def test_criterion_04_rockafellar_containment_and_canonicity():
    with criterion(4, "extension contains pairs; base-point canonicity"):
        rng = np.random.default_rng(12)
        for _ in range(50):
            d = int(rng.integers(1, 4))
            S = chained_pairs(rng, d)
            b1, b2 = (int(v) for v in rng.choice(len(S), 2, replace=False))
            psi1 = rockafellar_potential(S, b1)
            psi2 = rockafellar_potential(S, b2)
            for xi, yi in zip(S.x, S.y):
                verts = np.asarray(eval_subdifferential(psi1, xi))
                assert np.linalg.norm(verts - yi, axis=1).min() < 1e-9
            for q in rng.normal(size=(50, d)) * 2.0:
                v1 = np.asarray(eval_subdifferential(psi1, q))
                v2 = np.asarray(eval_subdifferential(psi2, q))
                assert hausdorff_distance(v1, v2) < 1e-9


def test_criterion_05_subgradient_inequality():
    with criterion(5, "subgradient inequality at every returned vertex"):
        rng = np.random.default_rng(13)
        for _ in range(20):
            d = int(rng.integers(1, 4))
            S = chained_pairs(rng, d)
            psi = rockafellar_potential(S, int(rng.integers(len(S))))
            for _ in range(100):
                x = rng.normal(size=d) * 2.0
                z = rng.normal(size=d) * 2.0
                psi_x = psi.value(x)
                psi_z = psi.value(z)
                for y in np.asarray(eval_subdifferential(psi, x)):
                    assert psi_z >= psi_x + float(y @ (z - x)) - 1e-9


def test_criterion_06_gaussian_local_uniform_decay(gaussian_scenario):
    with criterion(6, "d=2 Gaussian sup-error medians strictly decay"):
        cfg, report, elapsed = gaussian_scenario
        per_n = report.aggregates["per_n"]
        medians = [per_n[str(n)]["median_sup_error_k"]
                   for n in cfg.sample_sizes]
        assert all(b < a for a, b in zip(medians, medians[1:]))
        assert report.aggregates["spearman_logn_sup_error"] == -1.0
        assert medians[-1] < 0.5 * medians[0]
        for row in report.rows:
            assert row["monotone_certified"]


def test_criterion_07_gaussian_hausdorff_decay(gaussian_scenario):
    with criterion(7, "image Hausdorff medians decay at delta 0 and 0.1"):
        cfg, report, _ = gaussian_scenario
        per_n = report.aggregates["per_n"]
        for key in ("median_hausdorff_k", "median_hausdorff_k_delta"):
            meds = [per_n[str(n)][key] for n in cfg.sample_sizes]
            assert all(b < a for a, b in zip(meds, meds[1:]))


def test_criterion_08_range_containment_and_global_sup():
    with criterion(8, "range containment and receding-set decay"):
        ang = 2 * np.pi * np.arange(16) / 16
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        cfg = ExperimentConfig(
            dimension=2,
            source={"family": "gaussian", "cov": [[1.0, 0.0], [0.0, 1.0]]},
            target={"family": "spherical_uniform_grid"},
            sample_sizes=(64, 256, 1024),
            replications=10,
            seed=20240817,
            compact_k=Box([-1.0, -1.0], [1.0, 1.0]),
            resolution=8,
            receding_set=Union((Box([-10.0, -10.0], [10.0, 10.0]),
                                Cone([0.0, 0.0], dirs))),
            r_max=10.0,
            range_descriptor=Ball([0.0, 0.0], 1.0),
        )
        report = run_consistency_experiment(cfg)
        for row in report.rows:
            assert row["range_contained"] is True
            assert row["monotone_certified"]
        meds = [report.aggregates["per_n"][str(n)]["median_global_sup_e"]
                for n in cfg.sample_sizes]
        assert all(b < a for a, b in zip(meds, meds[1:]))


def test_criterion_09_one_dimensional_closed_form():
    # the empirical sample is matched to the deterministic discretization of
    # the uniform[0, 2] reference, the one-dimensional rank-map setting
    with criterion(9, "d=1 uniform scaling map, threshold 0.05 at n=1024"):
        cfg = ExperimentConfig(
            dimension=1,
            source={"family": "uniform_box", "lo": [0.0], "hi": [1.0]},
            target={"family": "uniform_grid", "lo": [0.0], "hi": [2.0]},
            sample_sizes=(16, 64, 256, 1024),
            replications=20,
            seed=20240817,
            compact_k=Box([0.25], [0.75]),
            resolution=8,
        )
        report = run_consistency_experiment(cfg)
        per_n = report.aggregates["per_n"]
        meds = [per_n[str(n)]["median_sup_error_k"] for n in cfg.sample_sizes]
        assert all(b < a for a, b in zip(meds, meds[1:]))
        assert meds[-1] < 0.05
        # confirm the solver against the sorted-rearrangement oracle on
        # fresh draws from the same scenario
        rng = np.random.default_rng(99)
        for _ in range(5):
            P = uniform_measure(rng.random((256, 1)))
            Q = uniform_measure(rng.random((256, 1)) * 2.0)
            assert solve_discrete_ot(P, Q).transport_cost() == pytest.approx(
                sorted_1d_ot(P, Q).transport_cost(), rel=1e-9)


def test_criterion_10_ranks_bijective_monotone_optimal():
    with criterion(10, "rank assignments: bijective, monotone, optimal"):
        rng = np.random.default_rng(14)
        grid = center_outward_grid(2, 4, 0, dim=2)
        for _ in range(50):
            sample = rng.normal(size=(8, 2))
            ra = center_outward_ranks(sample, grid)
            assert sorted(ra.assignment.tolist()) == list(range(8))
            pairs = PairSet(sample, grid.points[ra.assignment])
            assert is_cyclically_monotone(pairs).holds
            cost = float(((sample - grid.points[ra.assignment]) ** 2).sum()) / 8
            ref = brute_force_ot(uniform_measure(sample),
                                 uniform_measure(grid.points)).transport_cost()
            assert cost == pytest.approx(ref, rel=1e-9)


def test_criterion_11_determinism(gaussian_scenario):
    with criterion(11, "identical seed reproduces the report byte for byte"):
        cfg, report, _ = gaussian_scenario
        rerun = run_consistency_experiment(gaussian_scenario_config())
        assert dumps_canonical(rerun.to_json()) == dumps_canonical(
            report.to_json())
