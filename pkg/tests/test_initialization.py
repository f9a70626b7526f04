"""Screening, shrinkage intensity, and the small generalized eigensolve."""

import math

import numpy as np
import pytest

from mscca import (BlockLayout, CovOps, InitConfig, ScenarioSpec, generate,
                   init_direction, screen_features, shrinkage_intensity,
                   standardize)
from mscca.initialization import _leading_generalized

from conftest import correlated_pair_matrix, random_dataset


class TestScreenFeatures:
    def test_correlated_pair_selected(self):
        rng = np.random.default_rng(0)
        n, p_d = 200, 15
        z = rng.standard_normal(n)
        X = rng.standard_normal((n, 2 * p_d))
        X[:, 4] = z
        X[:, p_d + 9] = z          # duplicated feature across the two blocks
        ds = standardize(X, BlockLayout([p_d, p_d]))
        sel = screen_features(ds, InitConfig(per_block_keep=3))
        assert 4 in sel.indices
        assert p_d + 9 in sel.indices
        assert not sel.fallback

    def test_cardinality_on_independent_blocks(self):
        rng = np.random.default_rng(1)
        ds = random_dataset(rng, 120, [20, 20, 20])
        keep = 5
        sel = screen_features(ds, InitConfig(per_block_keep=keep))
        assert sel.indices.size == 3 * keep
        assert sel.per_block_counts == (keep, keep, keep)

    def test_whole_block_when_keep_exceeds_size(self):
        rng = np.random.default_rng(2)
        ds = random_dataset(rng, 50, [3, 8])
        sel = screen_features(ds, InitConfig(per_block_keep=10))
        assert (sel.indices[:3] == [0, 1, 2]).all()
        assert sel.per_block_counts == (3, 8)

    def test_fallback_when_all_scores_vanish(self):
        # disjoint one-hot columns: every off-diagonal entry is exactly zero
        X = math.sqrt(30) * np.eye(30)[:, :6]
        ops = CovOps(X, BlockLayout([3, 3]))
        with pytest.warns(UserWarning, match="falling back"):
            sel = screen_features(ops, InitConfig(per_block_keep=2))
        assert sel.fallback
        assert sel.indices.size == 4

    def test_budget_defaults(self):
        cfg = InitConfig()
        assert cfg.resolved_m(1000, 2000) == math.ceil(1000 / math.log(2000))
        assert cfg.resolved_keep(1000, 4) == math.ceil(1000 / 16)
        assert InitConfig(m=7).resolved_m(10, 10) == 7


class TestShrinkageIntensity:
    def test_zero_when_products_constant(self):
        # alternating signs: every pairwise sample product is identically 1
        n = 20
        col = np.tile([1.0, -1.0], n // 2)
        X = np.column_stack([col, col, -col, col])
        ops = CovOps(X, BlockLayout([2, 2]))
        sel = np.arange(4)
        tau = shrinkage_intensity(ops, sel)
        assert tau == pytest.approx(0.0, abs=1e-12)

    def test_one_when_off_diagonals_vanish(self):
        rng = np.random.default_rng(4)
        Q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        ops = CovOps(Q * math.sqrt(40), BlockLayout([2, 3]))
        assert shrinkage_intensity(ops, np.arange(5)) == 1.0

    @pytest.mark.parametrize("seed", range(8))
    def test_always_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        ds = random_dataset(rng, rng.integers(5, 60), [4, 4])
        tau = shrinkage_intensity(ds, np.arange(8))
        assert 0.0 <= tau <= 1.0

    def test_preconditions(self):
        rng = np.random.default_rng(5)
        ds = random_dataset(rng, 20, [2, 2])
        with pytest.raises(ValueError):
            shrinkage_intensity(ds, np.array([0]))


class TestInitDirection:
    def test_two_feature_closed_form(self):
        for r in (0.8, -0.8):
            X = correlated_pair_matrix(50, r)
            ops = CovOps(X, BlockLayout([1, 1]))
            beta = init_direction(ops, InitConfig(per_block_keep=1))
            expected = np.array([1.0, math.copysign(1.0, r)]) / math.sqrt(2)
            np.testing.assert_allclose(beta, expected, atol=1e-10)

    def test_unit_norm_and_support(self):
        rng = np.random.default_rng(6)
        ds = random_dataset(rng, 80, [10, 10])
        cfg = InitConfig(per_block_keep=4)
        sel = screen_features(ds, cfg)
        beta = init_direction(ds, cfg)
        assert np.linalg.norm(beta) == pytest.approx(1.0, abs=1e-12)
        outside = np.setdiff1d(np.arange(20), sel.indices)
        np.testing.assert_array_equal(beta[outside], np.zeros(outside.size))
        # Cauchy-Schwarz keeps the start feasible for the loosest bound
        assert np.abs(beta).sum() <= math.sqrt(sel.indices.size) + 1e-12

    def test_full_shrinkage_reduces_to_diagonal_problem(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((30, 5))
        sigma = A.T @ A / 30
        lam = sigma + 0.5 * np.eye(5)
        w_full = _leading_generalized(sigma, lam, 1.0)
        evals, evecs = np.linalg.eigh(
            np.diag(1 / np.sqrt(np.diag(lam))) @ sigma
            @ np.diag(1 / np.sqrt(np.diag(lam))))
        ref = np.diag(1 / np.sqrt(np.diag(lam))) @ evecs[:, -1]
        ref /= np.linalg.norm(ref)
        assert abs(abs(w_full @ ref) - 1.0) < 1e-10

    @pytest.mark.parametrize("seed", range(6))
    def test_eigensolver_against_power_iteration(self, seed):
        # whiten-then-eig (implementation) vs solve-then-power-iterate oracle
        rng = np.random.default_rng(seed)
        p = int(rng.integers(3, 13))
        A = rng.standard_normal((p + 10, p))
        sigma = A.T @ A / (p + 10)
        B = rng.standard_normal((p + 10, p))
        lam = B.T @ B / (p + 10) + 0.2 * np.eye(p)
        w = _leading_generalized(sigma, lam, 0.0)
        v = rng.standard_normal(p)
        for _ in range(20000):
            v = np.linalg.solve(lam, sigma @ v)
            v /= np.linalg.norm(v)
        assert abs(w @ v) >= 1 - 1e-8

    def test_cholesky_failure_surfaces(self):
        from mscca.errors import CholeskyFailure
        sigma = np.eye(3)
        lam = np.diag([1.0, 0.0, 1.0])   # zero variance survives any shrinkage
        with pytest.raises(CholeskyFailure):
            _leading_generalized(sigma, lam, 0.3)

    def test_sign_deterministic(self):
        rng = np.random.default_rng(8)
        ds = random_dataset(rng, 60, [5, 5])
        b1 = init_direction(ds)
        b2 = init_direction(ds)
        np.testing.assert_array_equal(b1, b2)
        lead = np.flatnonzero(np.abs(b1) > 1e-12)[0]
        assert b1[lead] > 0


class TestInformativeness:
    def test_close_to_truth_on_planted_instances(self):
        hits = 0
        reps = 20
        for rep in range(reps):
            spec = ScenarioSpec("B", cov_family="identity", n=1000, s=1, seed=99)
            train, _, truth = generate(spec, stream=rep)
            beta0 = init_direction(train)
            if 1 - abs(beta0 @ truth.xi[:, 0]) <= 0.5:
                hits += 1
        assert hits >= 0.8 * reps
