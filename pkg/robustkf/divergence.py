"""Kullback-Leibler tolerance function γ and its inversion for θ.

    γ(P, θ) = ½ [log det(I − θP) + tr((I − θP)⁻¹) − n],   0 ≤ θ < 1/σ(P)

γ is strictly increasing in θ, nondecreasing in P, vanishes at θ = 0 and
grows without bound as θ approaches 1/σ(P), so c = γ(P, θ) has exactly one
root for every c > 0.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .conf import resolve
from .exceptions import NoConvergence, OutOfDomain
from .numerics import symmetrize


logger = logging.getLogger(__name__)

UPPER_MARGIN = 1e-12


@dataclass(frozen=True)
class ThetaSolution:
    theta: float
    achieved_c: float
    iterations: int
    bracket: tuple


def gamma(P, theta):
    P = symmetrize(P)
    n = P.shape[0]
    if theta < 0:
        raise OutOfDomain(f"theta={theta} is negative", operation='gamma')
    if theta == 0:
        return 0.0
    sigma = float(np.max(np.abs(linalg.eigvalsh(P))))
    if theta * sigma >= 1.0:
        raise OutOfDomain(f"theta={theta:.6g} is not below 1/sigma(P)={1.0 / sigma:.6g}", operation='gamma')

    factor = linalg.cho_factor(np.eye(n) - theta * P, lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    trace_inv = float(np.trace(linalg.cho_solve(factor, np.eye(n))))
    return 0.5 * (log_det + trace_inv - n)


def _gamma_on_spectrum(eigenvalues, theta):
    x = theta * eigenvalues
    # log(1 − x) + 1/(1 − x) − 1, written to keep the small-x cancellation mild
    return 0.5 * float(np.sum(np.log1p(-x) + x / (1.0 - x)))


def solve_theta(P, c, *, tol=None, max_bisections=None):
    """Unique θ in [0, 1/σ(P)) with γ(P, θ) = c.

    The bracket is expanded geometrically towards the singular boundary and
    then bisected until it collapses to floating-point resolution, so θ is a
    deterministic function of P to machine precision.
    """
    if not c > 0:
        raise OutOfDomain(f"tolerance c={c} must be positive", operation='solve_theta')
    tol = resolve(tol, 'THETA_TOL')
    max_bisections = resolve(max_bisections, 'THETA_MAX_BISECTIONS')

    eigenvalues = linalg.eigvalsh(symmetrize(P))
    sigma = float(eigenvalues[-1])
    if sigma <= 0:
        raise OutOfDomain("P has no positive eigenvalue", operation='solve_theta')
    ceiling = (1.0 - UPPER_MARGIN) / sigma

    lo, hi = 0.0, ceiling * 2.0 ** -20
    while _gamma_on_spectrum(eigenvalues, hi) < c:
        if hi >= ceiling:
            raise OutOfDomain(
                f"c={c:.6g} exceeds gamma at the domain boundary", operation='solve_theta')
        lo, hi = hi, min(2.0 * hi, ceiling)

    iterations = 0
    while iterations < max_bisections:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        iterations += 1
        if _gamma_on_spectrum(eigenvalues, mid) < c:
            lo = mid
        else:
            hi = mid

    theta = 0.5 * (lo + hi)
    achieved = _gamma_on_spectrum(eigenvalues, theta)
    if abs(achieved - c) > tol * (1.0 + c):
        raise NoConvergence(
            f"|gamma - c| = {abs(achieved - c):.3g} after {iterations} bisections",
            iterations=iterations, last_iterate=theta, operation='solve_theta')
    return ThetaSolution(theta=theta, achieved_c=achieved, iterations=iterations, bracket=(lo, hi))
