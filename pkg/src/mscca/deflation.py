"""Sequential estimation of multiple directions by data-matrix deflation.

After a direction beta is fitted, its aggregated score Z = X beta is
projected out of the data rows, so the next fit sees only variation not yet
explained. Deflating the data matrix costs O(np); the equivalent Schur
complement recursion on the covariance (schur_deflate_cov) is kept as a dense
oracle for tests. The within-block denominator is never deflated: each
deflated problem keeps the original Lambda.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import CovOps, as_cov_ops
from .errors import DegenerateQuadraticForm, DegenerateScore
from .initialization import InitConfig, init_direction
from .projection import project_l1_sphere
from .solver import (DirectionEstimate, fit_leading, per_block_scores,
                     select_iterate)

EARLY_STOP_MARGIN = 1e-3


@dataclass
class DeflationState:
    """Current deflated data matrix and the (beta, score) history behind it."""

    X_tilde: np.ndarray
    history: list

    @classmethod
    def fresh(cls, X):
        return cls(np.asarray(X, dtype=np.float64), [])


def deflate_data(state, beta):
    """Project the aggregated score Z = X_tilde beta out of every column.

    Returns a new state with X_tilde' = (I - ZZ'/||Z||^2) X_tilde and the
    (beta, Z) pair appended to the history.
    """
    beta = np.asarray(beta, dtype=np.float64)
    Z = state.X_tilde @ beta
    nz2 = float(Z @ Z)
    if math.sqrt(nz2) < 1e-12:
        raise DegenerateScore("aggregated score is numerically zero")
    X_new = state.X_tilde - np.outer(Z, Z @ state.X_tilde) / nz2
    return DeflationState(X_new, state.history + [(beta.copy(), Z)])


def schur_deflate_cov(sigma, beta):
    """Schur complement deflation: Sigma - Sigma bb'Sigma / (b'Sigma b).

    The output is symmetric PSD and annihilates beta. Dense-mode oracle for
    the data-matrix recursion above.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    sb = sigma @ beta
    q = float(beta @ sb)
    if q <= 1e-14:
        raise DegenerateQuadraticForm(f"beta'Sigma beta = {q}")
    return sigma - np.outer(sb, sb) / q


def fit_sequential(ds, K, config, init=None, beta0=None):
    """Estimate K directions sequentially, deflating between fits.

    Each round replaces the covariance numerator with the deflated data's
    while the within-block denominator stays the original; the round's
    direction comes from screening initialization (or the supplied beta0 for
    the first round) followed by the proximal solver and iterate selection.
    Stops early with a warning when a round's quotient drops to ~1, i.e. no
    cross-block signal remains.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    base = as_cov_ops(ds)
    if not isinstance(base, CovOps):
        raise TypeError("fit_sequential needs data-backed covariance operators")
    init = init or InitConfig()
    state = DeflationState.fresh(base.X_num)
    estimates = []
    for k in range(K):
        if k > 0:
            state = deflate_data(state, estimates[-1].beta)
        ops = CovOps(base.X_den, base.layout, X_num=state.X_tilde)
        if k == 0 and beta0 is not None:
            start = np.asarray(beta0, dtype=np.float64)
        else:
            start = init_direction(ops, init)
            resolved = config.resolved(ops.n, ops.p, float(np.abs(start).sum()))
            if np.abs(start).sum() > resolved.L0:
                # a fixed L0 can be tighter than the screening start; pull the
                # start onto the constraint set before iterating
                start = project_l1_sphere(start, resolved.L0).beta
        traj = fit_leading(ops, start, config)
        t_star = select_iterate(ops, start, config, traj)
        beta_k = traj.betas[t_star]
        r_k = float(traj.f[t_star])
        Z = per_block_scores(state.X_tilde, base.layout, beta_k)
        estimates.append(DirectionEstimate(beta=beta_k, r_hat=r_k, Z=Z,
                                           selected_iter=t_star,
                                           trajectory=traj))
        if r_k < 1.0 + EARLY_STOP_MARGIN:
            if k + 1 < K:
                warnings.warn(
                    f"direction {k + 1} quotient {r_k:.4f} is at the no-signal "
                    f"floor; stopping after {k + 1} of {K} directions")
            break
    return estimates
