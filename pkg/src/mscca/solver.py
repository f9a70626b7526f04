"""Proximal gradient ascent of the multi-block Rayleigh quotient.

The leading direction maximizes f(beta) = beta'Sigma beta / beta'Lambda beta
over unit vectors under a geometrically decaying l1 budget L_t. Each step
forms the proximal target theta = beta + (eta/f)(Sigma - f Lambda)beta and
projects it back onto the constraint set. The run records the full iterate
trajectory; a final estimate is picked from it afterwards, either by a
penalized in-sample objective or by cross-validation (the recommended
default).
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import as_cov_ops
from .errors import (DegenerateDenominator, EmptyTrajectory, InfeasibleStart,
                     TooFewSamples)
from .projection import project_l1_sphere

DENOM_FLOOR = 1e-14
MAX_ETA_HALVINGS = 5


@dataclass
class SolverConfig:
    """Step size, l1 bound schedule, and iterate-selection controls.

    L0=None resolves at fit time to min(sqrt(p), ceil(||beta0||_1));
    decay=None resolves to 1 - min(0.1, 0.5*sqrt(ln p / n)). The schedule is
    L_t = L_inf + decay^t * (L0 - L_inf).
    """

    eta: float = 0.01
    L0: float = None
    L_inf: float = 1.0
    decay: float = None
    max_iters: int = 1000
    tol: float = 1e-8
    selection: str = "cv"      # "penalized" | "cv" | "last"
    tau: float = 1.0           # penalized selection
    c2: float = 1.0            # penalized selection
    folds: int = 5             # cross-validation selection

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.L_inf < 1.0:
            raise ValueError("L_inf must be at least 1")
        if self.L0 is not None and self.L0 < self.L_inf:
            raise ValueError("L0 must be at least L_inf")
        if self.decay is not None and not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.selection not in ("penalized", "cv", "last"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.tau < 0 or self.c2 < 0:
            raise ValueError("tau and c2 must be nonnegative")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    def resolved(self, n, p, beta0_l1):
        """Concrete copy with L0/decay filled in and validated against (n, p)."""
        sqrt_p = math.sqrt(p)
        L0 = self.L0
        if L0 is None:
            L0 = min(sqrt_p, max(float(math.ceil(beta0_l1)), self.L_inf))
        if L0 > sqrt_p + 1e-9:
            raise ValueError(f"L0={L0} exceeds sqrt(p)={sqrt_p}")
        decay = self.decay
        if decay is None:
            decay = 1.0 - min(0.1, 0.5 * math.sqrt(math.log(p) / n))
        out = SolverConfig(eta=self.eta, L0=float(L0), L_inf=self.L_inf,
                           decay=float(decay), max_iters=self.max_iters,
                           tol=self.tol, selection=self.selection,
                           tau=self.tau, c2=self.c2, folds=self.folds)
        return out

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass
class Trajectory:
    """Iterates beta_t with objective values, l1 norms, and bound schedule."""

    betas: np.ndarray        # (T+1, p)
    f: np.ndarray            # (T+1,)
    l1: np.ndarray           # (T+1,)
    L: np.ndarray            # (T+1,)
    n: int
    p: int

    def __len__(self):
        return self.betas.shape[0]

    def beta_at(self, t):
        """Iterate at index t, clamped to the last recorded one."""
        return self.betas[min(t, len(self) - 1)]

    def to_csv(self, path):
        rows = np.column_stack([np.arange(len(self)), self.f, self.l1, self.L])
        np.savetxt(path, rows, delimiter=",", fmt="%.17g",
                   header="t,f_t,l1_t,L_t", comments="")


@dataclass
class DirectionEstimate:
    """One fitted direction: loadings, achieved quotient, per-block scores."""

    beta: np.ndarray
    r_hat: float
    Z: np.ndarray            # (n, D), Z_d = X_d beta_d / sqrt(n)
    selected_iter: int
    trajectory: Trajectory = None


def rayleigh(ops, beta):
    """beta'Sigma beta / beta'Lambda beta; scale-invariant in beta."""
    ops = as_cov_ops(ops)
    den = ops.lambda_quad(beta)
    if den <= DENOM_FLOOR:
        raise DegenerateDenominator(f"beta'Lambda beta = {den}")
    return ops.sigma_quad(beta) / den


def gradient(ops, beta):
    """Gradient of the Rayleigh quotient: (2/beta'Lambda beta)(Sigma - f Lambda)beta."""
    ops = as_cov_ops(ops)
    den = ops.lambda_quad(beta)
    if den <= DENOM_FLOOR:
        raise DegenerateDenominator(f"beta'Lambda beta = {den}")
    f = ops.sigma_quad(beta) / den
    return (2.0 / den) * (ops.sigma_apply(beta) - f * ops.lambda_apply(beta))


def bound_schedule(config, t):
    """L_t = L_inf + decay^t (L0 - L_inf): non-increasing with limit L_inf."""
    if config.L0 is None or config.decay is None:
        raise ValueError("schedule requires resolved L0 and decay")
    return config.L_inf + config.decay ** t * (config.L0 - config.L_inf)


def proximal_step(ops, beta_t, eta, L_next):
    """One proximal update: project beta_t + (eta/f)(Sigma - f Lambda)beta_t."""
    ops = as_cov_ops(ops)
    den = ops.lambda_quad(beta_t)
    if den <= DENOM_FLOOR:
        raise DegenerateDenominator(f"beta'Lambda beta = {den}")
    f = ops.sigma_quad(beta_t) / den
    if f <= DENOM_FLOOR:
        raise DegenerateDenominator("Rayleigh quotient vanished at the iterate")
    theta = beta_t + (eta / f) * (ops.sigma_apply(beta_t) - f * ops.lambda_apply(beta_t))
    return project_l1_sphere(theta, L_next).beta


def fit_leading(ds, beta0, config):
    """Run the proximal iteration from beta0 and record the full trajectory.

    Stops at max_iters, or earlier once the objective change falls below tol
    while the bound schedule has essentially reached L_inf. If the objective
    drops by more than tol on a step, the step is retried with a halved step
    size (at most 5 halvings over the whole run) to damp divergence.
    """
    ops = as_cov_ops(ds)
    beta0 = np.asarray(beta0, dtype=np.float64)
    nrm = np.linalg.norm(beta0)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"beta0 must be unit norm, got ||beta0||_2 = {nrm}")
    beta = beta0 / nrm
    cfg = config.resolved(ops.n, ops.p, float(np.abs(beta).sum()))
    if np.abs(beta).sum() > cfg.L0 + 1e-8:
        raise InfeasibleStart(
            f"||beta0||_1 = {np.abs(beta).sum():.6g} exceeds L0 = {cfg.L0}")

    betas = [beta]
    fs = [rayleigh(ops, beta)]
    l1s = [float(np.abs(beta).sum())]
    Ls = [bound_schedule(cfg, 0)]

    eta = cfg.eta
    halvings = 0
    for t in range(cfg.max_iters):
        L_next = bound_schedule(cfg, t + 1)
        beta_next = proximal_step(ops, beta, eta, L_next)
        f_next = rayleigh(ops, beta_next)
        while f_next < fs[-1] - cfg.tol and halvings < MAX_ETA_HALVINGS:
            eta *= 0.5
            halvings += 1
            beta_next = proximal_step(ops, beta, eta, L_next)
            f_next = rayleigh(ops, beta_next)
        betas.append(beta_next)
        fs.append(f_next)
        l1s.append(float(np.abs(beta_next).sum()))
        Ls.append(L_next)
        converged = (abs(fs[-1] - fs[-2]) < cfg.tol
                     and L_next - cfg.L_inf < cfg.tol)
        beta = beta_next
        if converged:
            break
    return Trajectory(np.asarray(betas), np.asarray(fs), np.asarray(l1s),
                      np.asarray(Ls), n=ops.n, p=ops.p)


def select_penalized(traj, tau, c2, L0):
    """Index maximizing f_t - tau*rho_hat*sqrt(ln p / n)(l1_t + c2 l1_t^2 / L0).

    rho_hat substitutes the unknown population coefficient with max_t f_t.
    Ties break toward the larger (later, sparser) index.
    """
    if len(traj) == 0:
        raise EmptyTrajectory("no iterates to select from")
    rho_hat = float(np.max(traj.f))
    coef = tau * rho_hat * math.sqrt(math.log(traj.p) / traj.n)
    scores = traj.f - coef * (traj.l1 + c2 * traj.l1 ** 2 / L0)
    return int(len(scores) - 1 - np.argmax(scores[::-1]))


def select_cv(ds, beta0, config):
    """Pick the iteration index by K-fold cross-validation.

    Each training fold is refit with the shared (resolved) schedule and every
    iterate is scored by its Rayleigh quotient on the held-out fold's
    covariance operators; the index with the best mean held-out quotient wins
    (ties toward the later index). Folds are assigned round-robin by row.
    """
    ops = as_cov_ops(ds)
    folds = config.folds
    if ops.n < 2 * folds:
        raise TooFewSamples(f"n={ops.n} too small for {folds} folds")
    cfg = config.resolved(ops.n, ops.p, float(np.abs(beta0).sum()))

    rows = np.arange(ops.n)
    trajs = []
    heldout_ops = []
    for k in range(folds):
        mask = rows % folds == k
        trajs.append(fit_leading(ops.subset_rows(rows[~mask]), beta0, cfg))
        heldout_ops.append(ops.subset_rows(rows[mask]))
    T = max(len(tr) for tr in trajs)
    scores = np.zeros(T)
    for tr, ho in zip(trajs, heldout_ops):
        for t in range(T):
            try:
                scores[t] += rayleigh(ho, tr.beta_at(t))
            except DegenerateDenominator:
                scores[t] += -np.inf
    scores /= folds
    return int(len(scores) - 1 - np.argmax(scores[::-1]))


def select_iterate(ds, beta0, config, traj):
    """Apply the configured selection rule to a fitted trajectory."""
    if config.selection == "last":
        return len(traj) - 1
    if config.selection == "penalized":
        ops = as_cov_ops(ds)
        cfg = config.resolved(ops.n, ops.p, float(np.abs(beta0).sum()))
        return select_penalized(traj, cfg.tau, cfg.c2, cfg.L0)
    if config.selection == "cv":
        t_star = select_cv(ds, beta0, config)
        return min(t_star, len(traj) - 1)
    raise ValueError(f"unknown selection {config.selection!r}")


def per_block_scores(X, layout, beta):
    """Z in R^{n x D} with Z_d = X_d beta_d / sqrt(n)."""
    n = X.shape[0]
    Z = np.empty((n, layout.D))
    for d, sl in enumerate(layout.slices()):
        Z[:, d] = X[:, sl] @ beta[sl] / math.sqrt(n)
    return Z
