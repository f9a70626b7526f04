"""Screening-based initialization for the proximal solver.

Features are screened by their cross-block covariance strength after
soft-thresholding the empirical covariance down to its largest off-diagonal
entries; a shrinkage-regularized generalized eigenproblem on the screened set
then gives an informative, feasible starting direction. Cross-block products
are formed block pair by block pair, so the full p x p covariance is never
stored.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import as_cov_ops
from .errors import CholeskyFailure


@dataclass
class InitConfig:
    """Screening budgets. None fields resolve from (n, p, D) at run time:
    m = ceil(n / ln p) kept covariance entries (squared), and
    per_block_keep = ceil(n / (K_budget * D)) features per block."""

    K_budget: int = 4
    m: int = None
    per_block_keep: int = None

    def resolved_m(self, n, p):
        return self.m if self.m is not None else math.ceil(n / math.log(p))

    def resolved_keep(self, n, D):
        if self.per_block_keep is not None:
            return self.per_block_keep
        return math.ceil(n / (self.K_budget * D))


@dataclass
class ScreenedSet:
    """Sorted selected feature indices with per-block counts."""

    indices: np.ndarray
    per_block_counts: tuple
    fallback: bool = False


def _offdiag_blocks(ops):
    """Covariance blocks Sigma[d1][d2] = X_d1' X_d2 / n for all pairs,
    with the main diagonal zeroed inside within-block blocks."""
    X = ops.X_num
    n = ops.n
    layout = ops.layout
    blocks = {}
    for d1, sl1 in enumerate(layout.slices()):
        for d2, sl2 in enumerate(layout.slices()):
            if d2 < d1:
                blocks[(d1, d2)] = blocks[(d2, d1)].T
                continue
            G = X[:, sl1].T @ X[:, sl2] / n
            if d1 == d2:
                np.fill_diagonal(G, 0.0)
            blocks[(d1, d2)] = G
    return blocks


def screen_features(ds, cfg=None):
    """Select up to per_block_keep features per block by cross-block strength.

    The soft-threshold level is the m^2-th largest off-diagonal |Sigma| entry;
    each feature is scored by the l2 norm of its soft-thresholded cross-block
    row. If every score is zero the selection falls back to the leading
    features of each block by marginal variance, flagged via the fallback
    attribute.
    """
    ops = as_cov_ops(ds)
    cfg = cfg or InitConfig()
    layout = ops.layout
    m = cfg.resolved_m(ops.n, ops.p)
    keep = cfg.resolved_keep(ops.n, layout.D)

    blocks = _offdiag_blocks(ops)
    pool = []
    for d1 in range(layout.D):
        for d2 in range(layout.D):
            G = blocks[(d1, d2)]
            if d1 == d2:
                mask = ~np.eye(G.shape[0], dtype=bool)
                pool.append(np.abs(G[mask]))
            else:
                pool.append(np.abs(G).ravel())
    all_abs = np.concatenate(pool)
    budget = min(m * m, ops.p * (ops.p - 1))
    if budget >= all_abs.size:
        thr = 0.0      # budget covers every entry: keep them all
    else:
        # threshold at the budget-th largest off-diagonal magnitude
        thr = float(np.partition(all_abs, all_abs.size - budget)
                    [all_abs.size - budget])

    scores = np.zeros(ops.p)
    for d1, sl1 in enumerate(layout.slices()):
        for d2 in range(layout.D):
            if d2 == d1:
                continue
            soft = np.abs(blocks[(d1, d2)]) - thr
            soft[soft < 0] = 0.0
            scores[sl1] += (soft ** 2).sum(axis=1)
    scores = np.sqrt(scores)

    fallback = not np.any(scores > 0)
    if fallback:
        warnings.warn("all screening scores are zero; falling back to "
                      "per-block marginal variance ranking")
        scores = np.einsum("ij,ij->j", ops.X_num, ops.X_num) / ops.n

    selected = []
    counts = []
    for d, sl in enumerate(layout.slices()):
        sc = scores[sl]
        k = min(keep, sc.size)
        # stable top-k: ties resolve toward the lower feature index
        order = np.argsort(-sc, kind="stable")[:k]
        selected.append(np.sort(order) + sl.start)
        counts.append(k)
    return ScreenedSet(np.concatenate(selected), tuple(counts), fallback)


def shrinkage_intensity(ds, screened):
    """Shrinkage weight tau in [0, 1] for the within-block covariance.

    Ratio of the summed sampling variances of the off-diagonal covariance
    entries (centered cross-products, n/(n-1)^3 scaling) to the summed squared
    entries, clipped to [0, 1]. A vanishing denominator returns 1 (full
    shrinkage toward the diagonal).
    """
    ops = as_cov_ops(ds)
    idx = np.asarray(screened.indices if hasattr(screened, "indices") else screened)
    if idx.size < 2:
        raise ValueError("need at least two selected features")
    n = ops.n
    if n < 3:
        raise ValueError("need at least three samples")
    Xs = ops.X_num[:, idx]
    Xs = Xs - Xs.mean(axis=0)
    M1 = Xs.T @ Xs / n
    M2 = (Xs ** 2).T @ (Xs ** 2) / n
    var_w = M2 - M1 ** 2
    off = ~np.eye(idx.size, dtype=bool)
    num = n ** 2 / (n - 1) ** 3 * float(var_w[off].sum())
    den = float((M1[off] ** 2).sum())
    if den <= 1e-300:
        return 1.0
    return float(np.clip(num / den, 0.0, 1.0))


def init_direction(ds, cfg=None):
    """Screen, shrink, and solve the small generalized eigenproblem.

    The leading generalized eigenvector of (Sigma_SS, Lambda~_SS) with
    Lambda~_SS = (1-tau) Lambda_SS + tau diag(Lambda_SS) is computed by
    Cholesky whitening plus a symmetric eigensolve, embedded into p
    dimensions with zeros off the screened set, sign-fixed so the first
    sizable coordinate is positive, and normalized to unit l2.
    """
    ops = as_cov_ops(ds)
    cfg = cfg or InitConfig()
    screened = screen_features(ops, cfg)
    idx = screened.indices
    tau = shrinkage_intensity(ops, screened)

    Xn = ops.X_num[:, idx]
    sigma_ss = Xn.T @ Xn / ops.n
    lambda_ss = np.zeros_like(sigma_ss)
    layout = ops.layout
    for sl in layout.slices():
        inside = (idx >= sl.start) & (idx < sl.stop)
        if not inside.any():
            continue
        Xd = ops.X_den[:, idx[inside]]
        lambda_ss[np.ix_(inside, inside)] = Xd.T @ Xd / ops.n

    w = _leading_generalized(sigma_ss, lambda_ss, tau)
    beta = np.zeros(ops.p)
    beta[idx] = w
    lead = np.flatnonzero(np.abs(beta) > 1e-12)
    if lead.size and beta[lead[0]] < 0:
        beta = -beta
    return beta / np.linalg.norm(beta)


def _leading_generalized(sigma, lambda_, tau):
    """Leading generalized eigenvector of (sigma, (1-tau)lambda + tau diag)."""
    diag = np.diag(np.diag(lambda_))
    for t in (tau, 1.0):
        shrunk = (1.0 - t) * lambda_ + t * diag
        try:
            C = scipy.linalg.cholesky(shrunk, lower=True)
        except scipy.linalg.LinAlgError:
            continue
        B = scipy.linalg.solve_triangular(C, sigma, lower=True)
        B = scipy.linalg.solve_triangular(C, B.T, lower=True)
        B = 0.5 * (B + B.T)
        _, vecs = scipy.linalg.eigh(B)
        w = scipy.linalg.solve_triangular(C.T, vecs[:, -1], lower=False)
        return w / np.linalg.norm(w)
    raise CholeskyFailure("within-block covariance singular even at tau = 1")
