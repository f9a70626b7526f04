"""Datasets, block structure, standardization, and covariance operators.

All solver-facing covariance algebra goes through CovOps, which applies the
empirical covariance Sigma = X'X/n and its block-diagonal restriction Lambda
as matrix-vector products in O(np), never materializing a p x p matrix.
Dense mode is available for small problems and for test oracles.
"""

import json

import numpy as np

from .errors import ConstantColumn, DimensionMismatch

DENSE_MODE_MAX_P = 2000


class BlockLayout:
    """Partition of p features into D >= 2 contiguous blocks."""

    def __init__(self, block_sizes):
        sizes = tuple(int(b) for b in block_sizes)
        if len(sizes) < 2:
            raise ValueError("at least two blocks are required")
        if any(b < 1 for b in sizes):
            raise ValueError("block sizes must be positive integers")
        self.block_sizes = sizes
        self.D = len(sizes)
        self.p = int(sum(sizes))
        bounds = [0]
        for b in sizes:
            bounds.append(bounds[-1] + b)
        self.bounds = tuple(bounds)

    def block_slice(self, d):
        """Column slice of block d (0-based)."""
        return slice(self.bounds[d], self.bounds[d + 1])

    def slices(self):
        return [self.block_slice(d) for d in range(self.D)]

    def block_of(self, j):
        """Block index owning feature j."""
        return int(np.searchsorted(self.bounds, j, side="right") - 1)

    def __eq__(self, other):
        return isinstance(other, BlockLayout) and self.block_sizes == other.block_sizes

    def __repr__(self):
        return f"BlockLayout({list(self.block_sizes)})"


class Dataset:
    """n x p data matrix with its block layout and standardization statistics.

    col_means / col_scales are the training-time statistics, retained so that
    held-out data can be transformed consistently.
    """

    def __init__(self, X, layout, standardized=False, col_means=None, col_scales=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch("X must be a 2-d array")
        if X.shape[0] < 2:
            raise ValueError("need at least two samples")
        if X.shape[1] != layout.p:
            raise DimensionMismatch(
                f"X has {X.shape[1]} columns, layout expects {layout.p}"
            )
        self.X = X
        self.layout = layout
        self.standardized = bool(standardized)
        self.col_means = None if col_means is None else np.asarray(col_means, float)
        self.col_scales = None if col_scales is None else np.asarray(col_scales, float)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def standardize(X, layout, scale=True):
    """Demean columns (and by default rescale to unit sample variance).

    Sample variance uses the n-1 denominator. The per-column means and scales
    are stored on the returned Dataset so test data can be transformed with
    the training statistics. With scale=False only the means are removed.

    Raises ConstantColumn if any column has zero variance.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be n x p with n >= 2")
    means = X.mean(axis=0)
    Xc = X - means
    sd = Xc.std(axis=0, ddof=1)
    zero = np.flatnonzero(sd == 0.0)
    if zero.size:
        raise ConstantColumn(int(zero[0]))
    scales = sd if scale else np.ones_like(sd)
    return Dataset(Xc / scales, layout, standardized=True,
                   col_means=means, col_scales=scales)


def transform_like(train, X_new):
    """Apply a training Dataset's standardization statistics to new rows."""
    if train.col_means is None or train.col_scales is None:
        raise ValueError("training dataset carries no standardization statistics")
    X_new = np.ascontiguousarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != train.p:
        raise DimensionMismatch("new data has wrong number of columns")
    Z = (X_new - train.col_means) / train.col_scales
    return Dataset(Z, train.layout, standardized=True,
                   col_means=train.col_means, col_scales=train.col_scales)


class CovOps:
    """Products with Sigma = X'X/n and its block-diagonal restriction Lambda.

    An optional numerator matrix X_num replaces X in Sigma-products while
    Lambda keeps the original within-block covariances; this is how deflated
    problems are represented (the denominator is never deflated).

    mode="matrix-free" applies operators through the data (cost O(np));
    mode="dense" precomputes both p x p matrices (p <= 2000, used for small
    problems and oracles). The two modes agree to floating-point accuracy.
    """

    def __init__(self, X, layout, X_num=None, mode="matrix-free"):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != layout.p:
            raise DimensionMismatch("data matrix does not match layout")
        self.X_den = X
        self.X_num = X if X_num is None else np.ascontiguousarray(X_num, np.float64)
        if self.X_num.shape != X.shape:
            raise DimensionMismatch("numerator matrix must match data shape")
        self.layout = layout
        self.n = X.shape[0]
        self.p = X.shape[1]
        if mode not in ("matrix-free", "dense"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self._sigma = None
        self._lambda = None
        if mode == "dense":
            if self.p > DENSE_MODE_MAX_P:
                raise ValueError(f"dense mode limited to p <= {DENSE_MODE_MAX_P}")
            self._sigma = self.dense_sigma()
            self._lambda = self.dense_lambda()

    @classmethod
    def from_dataset(cls, ds, X_num=None, mode="matrix-free"):
        return cls(ds.X, ds.layout, X_num=X_num, mode=mode)

    def _check(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.p,):
            raise DimensionMismatch(f"expected vector of length {self.p}")
        return v

    def sigma_apply(self, v):
        """X'Xv/n via two matrix-vector products."""
        v = self._check(v)
        if self._sigma is not None:
            return self._sigma @ v
        return self.X_num.T @ (self.X_num @ v) / self.n

    def lambda_apply(self, v):
        """Block-diagonal restriction: per block d, X_d'X_d v_d / n."""
        v = self._check(v)
        if self._lambda is not None:
            return self._lambda @ v
        out = np.empty_like(v)
        for sl in self.layout.slices():
            Xd = self.X_den[:, sl]
            out[sl] = Xd.T @ (Xd @ v[sl]) / self.n
        return out

    def sigma_quad(self, v):
        """v' Sigma v = ||X_num v||^2 / n (nonnegative by construction)."""
        v = self._check(v)
        u = self.X_num @ v
        return float(u @ u) / self.n

    def lambda_quad(self, v):
        """v' Lambda v = sum_d ||X_d v_d||^2 / n (nonnegative by construction)."""
        v = self._check(v)
        total = 0.0
        for sl in self.layout.slices():
            u = self.X_den[:, sl] @ v[sl]
            total += float(u @ u)
        return total / self.n

    def dense_sigma(self):
        if self._sigma is not None:
            return self._sigma
        return self.X_num.T @ self.X_num / self.n

    def dense_lambda(self):
        if self._lambda is not None:
            return self._lambda
        out = np.zeros((self.p, self.p))
        for sl in self.layout.slices():
            Xd = self.X_den[:, sl]
            out[sl, sl] = Xd.T @ Xd / self.n
        return out

    def subset_rows(self, idx):
        """Operators restricted to a row subset (used by cross-validation)."""
        idx = np.asarray(idx)
        return CovOps(self.X_den[idx], self.layout,
                      X_num=None if self.X_num is self.X_den else self.X_num[idx])


class DenseOps:
    """Covariance products from explicit (Sigma, Lambda) matrices.

    Used by tests and oracles where the two matrices are not tied to a data
    matrix (e.g. Sigma = diag(2, 1) against Lambda = I). The n attribute is
    metadata only (penalized selection scales with sqrt(ln p / n)).
    """

    def __init__(self, sigma, lambda_, n=1):
        sigma = np.asarray(sigma, dtype=np.float64)
        lambda_ = np.asarray(lambda_, dtype=np.float64)
        if sigma.shape != lambda_.shape or sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionMismatch("Sigma and Lambda must be square and same shape")
        self._sigma = sigma
        self._lambda = lambda_
        self.p = sigma.shape[0]
        self.n = int(n)
        self.mode = "dense"

    def _check(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.p,):
            raise DimensionMismatch(f"expected vector of length {self.p}")
        return v

    def sigma_apply(self, v):
        return self._sigma @ self._check(v)

    def lambda_apply(self, v):
        return self._lambda @ self._check(v)

    def sigma_quad(self, v):
        v = self._check(v)
        return float(v @ (self._sigma @ v))

    def lambda_quad(self, v):
        v = self._check(v)
        return float(v @ (self._lambda @ v))

    def dense_sigma(self):
        return self._sigma

    def dense_lambda(self):
        return self._lambda


def as_cov_ops(data):
    """Accept a Dataset or any CovOps-like object and return the operators."""
    if isinstance(data, Dataset):
        return CovOps.from_dataset(data)
    if hasattr(data, "sigma_apply") and hasattr(data, "lambda_apply"):
        return data
    raise TypeError(f"cannot build covariance operators from {type(data)!r}")


def read_csv_matrix(path):
    """Load a numeric CSV; a non-numeric first row is treated as a header."""
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",") if tok != ""]
    except ValueError:
        skip = 1
    X = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return X


def write_csv_matrix(path, X):
    np.savetxt(path, np.asarray(X, float), delimiter=",", fmt="%.17g")


def read_blocks_sidecar(path):
    """Read a {"blocks": [p_1, ..., p_D]} JSON sidecar into a BlockLayout."""
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise ValueError(f"{path}: expected a JSON object with a 'blocks' key")
    return BlockLayout(obj["blocks"])


def write_blocks_sidecar(path, layout):
    with open(path, "w") as fh:
        json.dump({"blocks": list(layout.block_sizes)}, fh)
        fh.write("\n")
