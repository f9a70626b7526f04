"""Shared fixtures and small builders for the test suite."""

import numpy as np
import pytest

from mscca import (BlockLayout, CovOps, ScenarioSpec, SolverConfig,
                   fit_sequential, generate)


def sample_feasible_unit_vectors(rng, p, L, count):
    """Random unit vectors with ||v||_1 <= L, mixing all support sizes.

    Draws Gaussian vectors on random k-subsets for k = 1..p, keeps the
    feasible ones, and tops up with small supports (always feasible for
    k <= L^2) until the requested count is reached.
    """
    chunks = []
    total = 0

    def draw(k, m):
        idx = rng.random((m, p)).argsort(axis=1)[:, :k]
        V = np.zeros((m, p))
        np.put_along_axis(V, idx, rng.standard_normal((m, k)), axis=1)
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        return V[np.abs(V).sum(axis=1) <= L]

    per_k = max(64, count // p)
    for k in range(1, p + 1):
        got = draw(k, per_k if k > 1 else max(per_k // 4, 16))
        chunks.append(got)
        total += len(got)
    k_easy = max(1, min(p, int(L * L)))
    while total < count:
        got = draw(k_easy, count - total + 64)
        chunks.append(got)
        total += len(got)
    return np.vstack(chunks)[:count]


def random_dataset(rng, n, block_sizes):
    """Standardized dataset with independent Gaussian features."""
    layout = BlockLayout(block_sizes)
    X = rng.standard_normal((n, layout.p))
    from mscca import standardize
    return standardize(X, layout)


def random_ops(rng, n, block_sizes):
    ds = random_dataset(rng, n, block_sizes)
    return CovOps.from_dataset(ds)


def correlated_pair_matrix(n, r):
    """n x 2 matrix with column quadratic means 1 and cross-moment exactly r.

    Built from an orthonormal pair so X'X/n = [[1, r], [r, 1]] in exact
    arithmetic (up to floating point rounding of sqrt).
    """
    e1 = np.zeros(n)
    e2 = np.zeros(n)
    e1[0] = 1.0
    e2[1] = 1.0
    u = np.sqrt(n) * e1
    v = np.sqrt(n) * (r * e1 + np.sqrt(1 - r * r) * e2)
    return np.column_stack([u, v])


@pytest.fixture(scope="session")
def fullscale_b_fit():
    """One full-scale Scenario B repetition (identity, n=1000, s=1) fitted
    for two directions; shared across the module-level example tests."""
    spec = ScenarioSpec("B", cov_family="identity", n=1000, s=1, seed=42)
    train, test, truth = generate(spec, stream=0)
    cfg = SolverConfig(selection="penalized", max_iters=300)
    ests = fit_sequential(train, 2, cfg)
    return train, test, truth, ests
