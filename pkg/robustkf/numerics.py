"""Small dense symmetric-matrix utilities shared by every other module.

Symmetric values are plain ``float64`` arrays that went through
:func:`symmetrize`; all functions here are pure.
"""
import logging

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .conf import resolve
from .exceptions import DimensionMismatch, NearSingular, NotPositiveDefinite, NotStable


logger = logging.getLogger(__name__)

SymMatrix = NDArray[np.float64]


def as_matrix(M, name='matrix'):
    a = np.atleast_2d(np.asarray(M, dtype=float))
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {a.shape}")
    return a


def as_square(M, name='matrix'):
    a = as_matrix(M, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def symmetrize(M) -> SymMatrix:
    a = as_square(M)
    return (a + a.T) / 2.0


def spectral_radius(M) -> float:
    a = as_square(M)
    if not np.all(np.isfinite(a)):
        raise ValueError("spectral radius of a non-finite matrix")
    return float(np.max(np.abs(linalg.eigvals(a))))


def min_eig_sym(M) -> float:
    return float(linalg.eigvalsh(symmetrize(M))[0])


def stein_residual(F, Q, sigma) -> float:
    """Frobenius norm of Σ − FᵀΣF − Q."""
    F = as_square(F)
    return float(np.linalg.norm(sigma - F.T @ sigma @ F - Q))


def solve_stein(F, Q, *, direct_max_dim=None) -> SymMatrix:
    """Solve the Stein equation Σ = FᵀΣF + Q for a Schur stable F.

    Delegates to :func:`scipy.linalg.solve_discrete_lyapunov` with ``Fᵀ``;
    the Kronecker ``direct`` method up to ``STEIN_DIRECT_MAX_DIM`` states and
    the ``bilinear`` transformation above it. A system that is stable by its
    spectral radius but still singular in floating point raises
    :class:`NotStable`.
    """
    F = as_square(F, 'F')
    Q = symmetrize(as_square(Q, 'Q'))
    if F.shape != Q.shape:
        raise DimensionMismatch(
            f"F is {F.shape} but Q is {Q.shape}", operation='solve_stein')
    radius = spectral_radius(F)
    if radius >= 1.0 - 1e-12:
        raise NotStable(
            f"spectral radius {radius:.6g} is not below one",
            radius=radius, operation='solve_stein')

    n = F.shape[0]
    method = 'direct' if n <= resolve(direct_max_dim, 'STEIN_DIRECT_MAX_DIM') else 'bilinear'
    try:
        sigma = linalg.solve_discrete_lyapunov(F.T, Q, method=method)
    except linalg.LinAlgError as exc:
        raise NotStable(
            f"Stein operator singular at spectral radius {radius:.6g} ({exc})",
            radius=radius, operation='solve_stein') from exc
    if not np.all(np.isfinite(sigma)):
        raise NotStable(
            f"non-finite Stein solution at spectral radius {radius:.6g}",
            radius=radius, operation='solve_stein')

    sigma = symmetrize(np.real(sigma))
    logger.debug("solve_stein n=%d method=%s radius=%.6g residual=%.3g",
                 n, method, radius, stein_residual(F, Q, sigma))
    return sigma


def symmetric_factor(K, *, atol=None):
    """Canonical lower-triangular L with L Lᵀ = K for a positive definite K."""
    K = symmetrize(K)
    smallest = min_eig_sym(K)
    if smallest <= resolve(atol, 'PD_ATOL'):
        raise NotPositiveDefinite(
            f"minimum eigenvalue {smallest:.6g} is not positive",
            eigenvalue=smallest, operation='symmetric_factor')
    return linalg.cholesky(K, lower=True)


def guarded_inverse(M, context, *, rtol=None) -> SymMatrix:
    """Inverse of a symmetric matrix that is safely away from singularity.

    ``context`` names the call site and is carried by :class:`NearSingular`
    so a breaking recursion can be traced back to the step that lost
    definiteness.
    """
    M = symmetrize(M)
    eigenvalues = linalg.eigvalsh(M)
    scale = float(np.max(np.abs(eigenvalues)))
    closest = float(eigenvalues[np.argmin(np.abs(eigenvalues))])
    if scale == 0.0 or abs(closest) <= resolve(rtol, 'SINGULAR_RTOL') * scale:
        raise NearSingular(
            f"{context}: eigenvalue {closest:.6g} against norm {scale:.6g}",
            context=context, eigenvalue=closest, operation='guarded_inverse')
    return symmetrize(linalg.solve(M, np.eye(M.shape[0]), assume_a='sym'))


def is_psd(M, *, atol=1e-12) -> bool:
    M = symmetrize(M)
    scale = 1.0 + float(np.max(np.abs(M)))
    return min_eig_sym(M) >= -atol * scale


def covariance_factor(S):
    """Square factor W with W Wᵀ = S for a positive semi-definite S.

    Works for singular S (zero initial covariance, zero noise), which the
    Cholesky path of :func:`symmetric_factor` rejects.
    """
    eigenvalues, vectors = linalg.eigh(symmetrize(S))
    return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
