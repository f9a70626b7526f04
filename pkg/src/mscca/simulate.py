"""Synthetic multi-block data generators for the desk-scale experiments.

Two scenarios: A has cross-block signal only between the first two blocks, B
correlates every pair of blocks. Within-block covariances come from one of
three families (identity, spiked, Toeplitz), all normalized to unit diagonal.
Ground-truth directions are sparse columns of U, orthonormalized block-wise
in the within-block inner product, and the population covariance is assembled
as Sigma[d][d'] = Lambda_d U_d Gamma U_d'' Lambda_d' on informative pairs.
Sampling uses a counter-based PRNG keyed by (seed, stream) so parallel
repetitions are reproducible.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import BlockLayout, standardize, transform_like
from .errors import NotPSD

COV_FAMILIES = ("identity", "spiked", "toeplitz")
SUPPORT_MODES = ("disjoint", "shared", "independent")
SPIKE_STRENGTH = 5.0
N_SPIKES = 3
TOEPLITZ_BASE = 0.3
TEST_SIZE = 2000
MAX_PSD_RETRIES = 10


@dataclass
class ScenarioSpec:
    """Generator settings; defaults match the desk-scale experiment grid."""

    scenario: str                      # "A" | "B"
    cov_family: str = "identity"
    n: int = 1000
    s: int = 1
    D: int = 4
    p_d: int = 500
    K_true: int = 3
    rho_tilde: tuple = None            # default 0.9 - (k-1)/5
    seed: int = 0
    support: str = "disjoint"
    n_test: int = TEST_SIZE
    scale: bool = True

    def __post_init__(self):
        if self.scenario not in ("A", "B"):
            raise ValueError("scenario must be 'A' or 'B'")
        if self.cov_family not in COV_FAMILIES:
            raise ValueError(f"cov_family must be one of {COV_FAMILIES}")
        if self.support not in SUPPORT_MODES:
            raise ValueError(f"support must be one of {SUPPORT_MODES}")
        if self.D < 2 or self.p_d < 1 or self.K_true < 1:
            raise ValueError("need D >= 2, p_d >= 1, K_true >= 1")
        if not 1 <= self.s <= self.p_d:
            raise ValueError(f"s must lie in [1, p_d={self.p_d}]")
        if self.rho_tilde is None:
            self.rho_tilde = tuple(0.9 - k / 5 for k in range(self.K_true))
        self.rho_tilde = tuple(float(r) for r in self.rho_tilde)
        if len(self.rho_tilde) != self.K_true:
            raise ValueError("rho_tilde must have K_true entries")
        if not all(0 < r < 1 for r in self.rho_tilde):
            raise ValueError("rho_tilde entries must lie in (0, 1)")
        if any(a <= b for a, b in zip(self.rho_tilde, self.rho_tilde[1:])):
            raise ValueError("rho_tilde must be strictly decreasing")
        if self.support == "shared" and self.s < self.K_true:
            raise ValueError(
                "shared support needs s >= K_true (cannot orthonormalize "
                f"{self.K_true} columns on {self.s} coordinates)")
        if self.support == "disjoint" and self.s * self.K_true > self.p_d:
            raise ValueError(
                f"disjoint support needs s*K_true <= p_d, got "
                f"{self.s}*{self.K_true} > {self.p_d}")

    @property
    def p(self):
        return self.D * self.p_d

    def layout(self):
        return BlockLayout([self.p_d] * self.D)

    def informative_blocks(self):
        return list(range(2)) if self.scenario == "A" else list(range(self.D))


@dataclass
class GroundTruth:
    """Population quantities behind one generated dataset."""

    U: np.ndarray              # (p, K), Lambda-orthonormal per informative block
    xi: np.ndarray             # (p, K), unit-l2 leading directions
    rho: np.ndarray            # (K,) population coefficients
    Sigma: np.ndarray          # (p, p)
    Lambda: np.ndarray         # (p, p) block diagonal
    support: list = field(default_factory=list)   # per-block sorted index lists


def _rng(seed, stream):
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1),
                                                      stream & (2**64 - 1)]))


def build_lambda(family, p_d, rng=None):
    """One within-block covariance with unit diagonal.

    identity -> I; spiked -> I + 5 sum_k u_k u_k' over 3 random orthonormal
    spikes, rescaled to unit diagonal; toeplitz -> 0.3^|i-j|.
    """
    if family == "identity":
        return np.eye(p_d)
    if family == "toeplitz":
        return scipy.linalg.toeplitz(TOEPLITZ_BASE ** np.arange(p_d))
    if family == "spiked":
        if rng is None:
            rng = np.random.default_rng()
        k = min(N_SPIKES, p_d)
        Q, _ = np.linalg.qr(rng.standard_normal((p_d, k)))
        A = np.eye(p_d) + SPIKE_STRENGTH * Q @ Q.T
        d = np.sqrt(np.diag(A))
        return A / np.outer(d, d)
    raise ValueError(f"unknown covariance family {family!r}")


class _DegenerateSupport(Exception):
    pass


def _draw_supports(spec, rng):
    """Per-block support indices for the K_true columns."""
    out = []
    for _ in spec.informative_blocks():
        if spec.support == "shared":
            idx = np.sort(rng.choice(spec.p_d, size=spec.s, replace=False))
            cols = [idx] * spec.K_true
        elif spec.support == "disjoint":
            idx = rng.choice(spec.p_d, size=spec.s * spec.K_true, replace=False)
            cols = [np.sort(idx[k * spec.s:(k + 1) * spec.s])
                    for k in range(spec.K_true)]
        else:  # independent draws per column; may overlap
            cols = [np.sort(rng.choice(spec.p_d, size=spec.s, replace=False))
                    for _ in range(spec.K_true)]
        out.append(cols)
    return out


def _lambda_orthonormalize(U, lam):
    """Modified Gram-Schmidt in the lam inner product, two passes."""
    U = U.copy()
    K = U.shape[1]
    for _ in range(2):
        for k in range(K):
            v = U[:, k]
            for j in range(k):
                v = v - (U[:, j] @ (lam @ v)) * U[:, j]
            nrm2 = float(v @ (lam @ v))
            if nrm2 <= 1e-24:
                raise _DegenerateSupport
            U[:, k] = v / math.sqrt(nrm2)
    return U


def _build_truth(spec, rng):
    layout = spec.layout()
    p, K = spec.p, spec.K_true
    informative = spec.informative_blocks()
    lambdas = [build_lambda(spec.cov_family, spec.p_d, rng)
               for _ in range(spec.D)]

    supports = _draw_supports(spec, rng)
    U = np.zeros((p, K))
    for b, d in enumerate(informative):
        Ud = np.zeros((spec.p_d, K))
        for k, idx in enumerate(supports[b]):
            Ud[idx, k] = rng.standard_normal(idx.size)
        Ud = _lambda_orthonormalize(Ud, lambdas[d])
        U[layout.block_slice(d)] = Ud

    gamma = np.diag(spec.rho_tilde)
    Sigma = np.zeros((p, p))
    Lambda = np.zeros((p, p))
    for d, sl in enumerate(layout.slices()):
        Sigma[sl, sl] = lambdas[d]
        Lambda[sl, sl] = lambdas[d]
    for d1 in informative:
        for d2 in informative:
            if d1 == d2:
                continue
            sl1, sl2 = layout.block_slice(d1), layout.block_slice(d2)
            Sigma[sl1, sl2] = (lambdas[d1] @ U[sl1] @ gamma
                               @ U[sl2].T @ lambdas[d2])

    xi = U / np.linalg.norm(U, axis=0)
    rho = (len(informative) - 1) * np.asarray(spec.rho_tilde) + 1.0
    support_lists = []
    for d in range(spec.D):
        if d in informative:
            b = informative.index(d)
            union = np.unique(np.concatenate(supports[b]))
            support_lists.append((layout.block_slice(d).start + union).tolist())
        else:
            support_lists.append([])
    return GroundTruth(U=U, xi=xi, rho=rho, Sigma=Sigma, Lambda=Lambda,
                       support=support_lists)


def generate(spec, stream=0):
    """Draw one (train, test, truth) triple for a scenario.

    The train Dataset is standardized; the test Dataset is transformed with
    the training statistics. stream selects an independent substream of the
    seed, e.g. the repetition index.
    """
    err = None
    for attempt in range(MAX_PSD_RETRIES):
        rng = _rng(spec.seed, (stream << 8) + attempt)
        try:
            truth = _build_truth(spec, rng)
            C = np.linalg.cholesky(truth.Sigma)
        except (_DegenerateSupport, np.linalg.LinAlgError) as exc:
            err = exc
            continue
        Z = rng.standard_normal((spec.n + spec.n_test, spec.p))
        X_all = Z @ C.T
        train = standardize(X_all[:spec.n], spec.layout(), scale=spec.scale)
        test = transform_like(train, X_all[spec.n:])
        return train, test, truth
    raise NotPSD(f"covariance assembly failed after {MAX_PSD_RETRIES} "
                 f"attempts: {err}")
