"""Exact Euclidean projection onto {beta : ||beta||_2 = 1, ||beta||_1 <= L}.

The projection of a target theta reduces to soft-thresholding |theta| at a
level c and renormalizing, where c is the smallest nonnegative value making
the l1/l2 ratio of the thresholded vector at most L. That ratio (zeta) is
continuous and non-increasing in c, so c is found by bisection. When the
ceil(L^2) largest magnitudes are all tied at the maximum, no threshold works
and an explicit optimal vector supported on the tied entries is returned.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateThreshold, InvalidBound, ZeroTarget

TIE_RTOL = 1e-12
BISECT_TOL = 1e-12
BISECT_MAX_ITERS = 200


@dataclass
class ProjectionResult:
    beta: np.ndarray
    threshold_c: float
    tie_case: bool


def zeta(theta, c):
    """l1/l2 ratio of the soft-thresholded magnitudes [|theta| - c]_+.

    Requires 0 <= c < max|theta_j| so at least one entry survives.
    """
    a = np.abs(np.asarray(theta, dtype=np.float64))
    if c < 0:
        raise ValueError("threshold c must be nonnegative")
    if a.size == 0 or c >= a.max():
        raise DegenerateThreshold(f"c={c} >= max|theta|")
    v = a - c
    v[v < 0] = 0.0
    return float(v.sum() / np.linalg.norm(v))


def _zeta_from_abs(a, c):
    v = a - c
    v[v < 0] = 0.0
    return v.sum() / np.linalg.norm(v)


def project_l1_sphere(theta, L):
    """Project theta onto the unit sphere intersected with the l1 ball of radius L.

    Returns a ProjectionResult whose beta is a global minimizer of
    ||beta - theta||_2 over the feasible set. Requires theta != 0 and
    1 <= L <= sqrt(p).
    """
    theta = np.asarray(theta, dtype=np.float64)
    p = theta.size
    l2 = np.linalg.norm(theta)
    if l2 == 0.0:
        raise ZeroTarget("cannot project the zero vector")
    L = float(L)
    if L < 1.0 - 1e-12 or L > math.sqrt(p) + 1e-12:
        raise InvalidBound(f"L={L} outside [1, sqrt({p})]")

    a = np.abs(theta)
    # zeta(0) <= L: plain renormalization already satisfies the l1 bound.
    if a.sum() <= L * l2:
        return ProjectionResult(theta / l2, 0.0, False)

    amax = float(a.max())
    jstar = min(p, max(1, math.ceil(L * L - 1e-9)))
    asort = np.sort(a)[::-1]
    if asort[jstar - 1] >= amax * (1.0 - TIE_RTOL):
        return _tie_projection(theta, a, L)

    # Smallest c >= 0 with zeta(c) <= L. zeta is non-increasing, zeta(0) > L,
    # and zeta(c) -> sqrt(multiplicity of the max) < L as c -> max|theta|,
    # so a crossing exists inside (0, asort[1]].
    lo = 0.0
    hi = float(asort[1])
    hi_ok = False
    tol = BISECT_TOL * amax
    for _ in range(BISECT_MAX_ITERS):
        if hi_ok and hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _zeta_from_abs(a, mid) <= L:
            hi = mid
            hi_ok = True
        else:
            lo = mid
    if not hi_ok:
        # Only reachable when the initial bracket already satisfies the bound
        # (unique maximum, hi < amax): validate it directly.
        if hi >= amax or _zeta_from_abs(a, hi) > L:
            raise DegenerateThreshold("bisection failed to bracket the threshold")
    c = hi
    tilde = a - c
    tilde[tilde < 0] = 0.0
    beta = np.sign(theta) * tilde
    beta /= np.linalg.norm(beta)
    return ProjectionResult(beta, float(c), False)


def _tie_projection(theta, a, L):
    """Optimal projection when the ceil(L^2) top magnitudes are all tied.

    Among the tied entries, weight is spread as evenly as the constraints
    allow: floor(L^2) entries get a common weight and one boundary entry takes
    the remainder, chosen by ascending feature index for determinism. The
    weights solve ||.||_1 = L, ||.||_2 = 1 exactly.
    """
    amax = float(a.max())
    tied = np.flatnonzero(a >= amax * (1.0 - TIE_RTOL))
    Lsq = L * L
    r = round(Lsq)
    beta = np.zeros_like(theta)
    if abs(Lsq - r) <= 1e-9 and 1 <= r <= tied.size:
        # integral L^2: uniform weight 1/L over L^2 tied entries
        idx = tied[: int(r)]
        beta[idx] = 1.0 / L
    else:
        k = int(math.floor(Lsq))
        root = math.sqrt(k * (k + 1 - Lsq))
        aw = (L * k + root) / (k * (k + 1))
        bw = max((L - root) / (k + 1), 0.0)
        idx = tied[: k + 1]
        beta[idx[:k]] = aw
        beta[idx[k]] = bw
    beta *= np.sign(theta)
    beta /= np.linalg.norm(beta)
    return ProjectionResult(beta, amax, True)
