"""Held-out evaluation metrics: deflated correlations and projection residuals.

The achieved multi-block correlation of direction k on test data mirrors the
fitting recursion: the test rows are deflated by the previously estimated
directions before the quotient numerator is formed, while the within-block
denominator always uses the original test rows. The projection residual
measures how much variance of a true aggregated score survives after
regressing it on the estimated scores.
"""

import warnings

import numpy as np

from .data import as_cov_ops
from .deflation import DeflationState, deflate_data
from .errors import DimensionMismatch


def test_deflated_correlation(test, estimates):
    """Deflated Rayleigh quotients of the estimated directions on test data.

    Direction 1 is evaluated on the raw test covariance; direction k >= 2 on
    test rows deflated by directions 1..k-1, keeping the original within-block
    denominator.
    """
    if not estimates:
        raise ValueError("no direction estimates given")
    ops = as_cov_ops(test)
    n = ops.n
    for est in estimates:
        if est.beta.shape != (ops.p,):
            raise DimensionMismatch("direction length does not match test data")
    state = DeflationState.fresh(ops.X_den)
    values = []
    for k, est in enumerate(estimates):
        if k > 0:
            state = deflate_data(state, estimates[k - 1].beta)
        u = state.X_tilde @ est.beta
        num = float(u @ u) / n
        den = ops.lambda_quad(est.beta)
        values.append(num / den)
    return values


def projection_residual(test, truth, estimates, joint=True):
    """Residual variance fraction of each true score after regressing on the
    estimated scores (plus intercept).

    joint=True regresses every true score on all estimated scores at once;
    joint=False pairs score l with estimate l only. Rank-deficient regressor
    matrices fall back to the minimum-norm least-squares solution with a
    warning.
    """
    ops = as_cov_ops(test)
    X = ops.X_den
    xi = np.atleast_2d(np.asarray(truth.xi, float).T).T    # (p, K_true)
    if xi.shape[0] != ops.p:
        raise DimensionMismatch("truth directions do not match test data")
    Z = X @ xi
    B = np.column_stack([est.beta for est in estimates])
    Zhat = X @ B

    out = []
    for ell in range(Z.shape[1]):
        z = Z[:, ell]
        if joint:
            regs = Zhat
        else:
            regs = Zhat[:, [min(ell, Zhat.shape[1] - 1)]]
        A = np.column_stack([np.ones(len(z)), regs])
        coef, _, rank, _ = np.linalg.lstsq(A, z, rcond=None)
        if rank < A.shape[1]:
            warnings.warn("rank-deficient regressors; using pseudo-inverse fit")
        resid = z - A @ coef
        denom = float(((z - z.mean()) ** 2).sum())
        out.append(float((resid ** 2).sum()) / denom)
    return out
