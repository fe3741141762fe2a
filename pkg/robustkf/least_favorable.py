"""Least favorable model synthesis.

Given the forward robust recursion, the adversary's model is

    ξ_{t+1} = Ã_t ξ_t + B̃_t ε_t
    y_t     = C̃_t ξ_t + D̃_t ε_t

    Ã_t = [[A, B H_t], [0, Ā_t + B̄_t H_t]]    B̃_t = [B; B̄_t] L_t
    C̃_t = [C, D H_t]                           D̃_t = D L_t
    K̃_t = (I − B̄_tᵀ X_{t+1} B̄_t)⁻¹ = L_t L_tᵀ, H_t = K̃_t B̄_tᵀ X_{t+1} Ā_t

with Ā_t = A − G_t C, B̄_t = B − G_t D, X_{t+1} = Ω_{t+1}⁻¹ + θ_t I and Ω_t⁻¹
propagated backwards from Ω_T⁻¹ = 0 by

    Ω_t⁻¹ = Ā_tᵀ (X_{t+1}⁻¹ − B̄_t B̄_tᵀ)⁻¹ Ā_t.

In steady state the backward step is the map Θ(X) = Āᵀ(X⁻¹ − B̄B̄ᵀ)⁻¹Ā + θI,
whose iterates from θI converge whenever the certificate of
:func:`certify` holds.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .conf import resolve
from .exceptions import (
    DimensionMismatch,
    InputError,
    NoConvergence,
    NoRealRoots,
    NotCertified,
    NumericalError,
    OutOfDomain,
)
from .numerics import (
    covariance_factor,
    guarded_inverse,
    min_eig_sym,
    solve_stein,
    spectral_radius,
    symmetric_factor,
    symmetrize,
)


logger = logging.getLogger(__name__)

RHO_EDGE = 1e-9
MONOTONE_ATOL = 1e-12


@dataclass(frozen=True)
class BackwardIterate:
    """Ω_t⁻¹ together with θ_{t−1}, the risk parameter of the step that consumes it."""
    t: int
    OmegaInv: np.ndarray
    theta: float

    @property
    def X(self):
        return self.OmegaInv + self.theta * np.eye(self.OmegaInv.shape[0])


@dataclass(frozen=True)
class BackwardLimit:
    X: np.ndarray
    OmegaInv: np.ndarray
    iterations: int
    monotone: bool
    residual: float


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Outcome of the ρ search.

    ``holds`` is ``margin >= 0``. With θ = 0 there is nothing to certify:
    ``margin`` is +inf, ``SigmaRho`` is zero and ``rho`` is NaN.
    """
    rho: float
    SigmaRho: np.ndarray
    margin: float
    holds: bool
    theta: float
    rho_upper: float


@dataclass(frozen=True)
class CertificateSweep:
    theta: float
    rhos: np.ndarray
    margins: np.ndarray

    @property
    def best(self):
        k = int(np.argmax(self.margins))
        return float(self.rhos[k]), float(self.margins[k])


@dataclass(frozen=True)
class StabilizingCheck:
    J: np.ndarray
    M: np.ndarray
    eigenvalues: np.ndarray
    stable: bool

    @property
    def radius(self):
        return float(np.max(np.abs(self.eigenvalues)))


@dataclass(frozen=True)
class LeastFavorableModel:
    Atil: np.ndarray
    Btil: np.ndarray
    Ctil: np.ndarray
    Dtil: np.ndarray
    H: np.ndarray
    Ktil: np.ndarray
    L: np.ndarray
    OmegaInvLimit: np.ndarray
    stationary: bool
    P0: np.ndarray
    theta: float
    G: np.ndarray

    @property
    def n(self):
        return self.P0.shape[0]

    @property
    def m(self):
        return self.Btil.shape[1]

    @property
    def p(self):
        return self.Ctil.shape[0]

    @property
    def initial_covariance(self):
        """Covariance of ξ_0 = [x_0; 0] with x_0 ~ N(0, P0)."""
        return linalg.block_diag(self.P0, np.zeros_like(self.P0))

    def state_covariance(self):
        """Stationary covariance of ξ; requires Ã stable."""
        return solve_stein(self.Atil.T, self.Btil @ self.Btil.T)

    def observation_covariance(self):
        return symmetrize(self.Ctil @ self.state_covariance() @ self.Ctil.T + self.Dtil @ self.Dtil.T)


@dataclass(frozen=True)
class ScalarRootAnalysis:
    """Both roots of b̄²x² − (1 − ā² + b̄²θ)x + θ = 0 and their feedback values.

    ``coefficient`` is the linear coefficient 1 − ā² + b̄²θ of the quadratic;
    ``text_coefficient`` is 1 − ā² − b̄²θ, the quantity whose positivity is
    usually quoted for the existence of two positive roots. The two differ
    in the sign of b̄²θ and both are reported.
    """
    abar: float
    bbar: float
    theta: float
    x1: float
    x2: float
    f1: float
    f2: float
    iteration_limit: float
    discriminant: float
    coefficient: float
    text_coefficient: float

    @property
    def limit_root(self):
        return 'x2' if abs(self.iteration_limit - self.x2) <= abs(self.iteration_limit - self.x1) else 'x1'

    @property
    def notes(self):
        if self.text_coefficient > 0:
            return "1 - a^2 - b^2 theta > 0; 1 - a^2 + b^2 theta used in the quadratic"
        return "1 - a^2 - b^2 theta <= 0; quadratic solved with 1 - a^2 + b^2 theta"


@dataclass(frozen=True)
class LFTrajectory:
    """Sample paths of the least favorable model, batched over ``paths``.

    ``states`` has shape (paths, T + 1, 2n) and ``observations``
    (paths, T, p).
    """
    states: np.ndarray
    observations: np.ndarray
    seed: int

    @property
    def paths(self):
        return self.states.shape[0]


def theta_map(X, Abar, Bbar, theta):
    """Θ(X) = Āᵀ(X⁻¹ − B̄B̄ᵀ)⁻¹Ā + θI for X ⪰ 0 with I − B̄ᵀXB̄ ≻ 0.

    The inverse is expanded as X + XB̄(I − B̄ᵀXB̄)⁻¹B̄ᵀX, which is also valid
    for singular X.
    """
    X = symmetrize(X)
    m = Bbar.shape[1]
    inner = symmetrize(np.eye(m) - Bbar.T @ X @ Bbar)
    smallest = min_eig_sym(inner)
    if smallest <= 0.0:
        raise OutOfDomain(
            f"X^-1 - Bbar Bbar^T is not positive definite (min eig of I - Bbar^T X Bbar = {smallest:.6g})",
            operation='theta_map')
    XB = X @ Bbar
    core = X + XB @ linalg.solve(inner, XB.T, assume_a='pos')
    return symmetrize(Abar.T @ core @ Abar + theta * np.eye(X.shape[0]))


def backward_recursion(model, steps):
    """Ω_t⁻¹ for t = 0..T from a forward run of T + 1 steps, with Ω_T⁻¹ = 0.

    Step t uses G_t from ``steps[t]`` and θ_t, which ``steps[t + 1]``
    carries.
    """
    steps = list(steps)
    T = len(steps) - 1
    n = model.n
    iterates = [None] * (T + 1)
    iterates[T] = BackwardIterate(t=T, OmegaInv=np.zeros((n, n)), theta=steps[T].theta)
    for t in range(T - 1, -1, -1):
        G = steps[t].G
        Abar = model.A - G @ model.C
        Bbar = model.B - G @ model.D
        try:
            OmegaInv = theta_map(iterates[t + 1].X, Abar, Bbar, 0.0)
        except OutOfDomain as exc:
            raise OutOfDomain(str(exc), t=t, operation='backward_recursion') from exc
        iterates[t] = BackwardIterate(t=t, OmegaInv=OmegaInv, theta=steps[t].theta)
    logger.debug("backward recursion over %d steps, |Omega_0^-1|=%.6g", T, np.linalg.norm(iterates[0].OmegaInv))
    return iterates


def mid_interval(iterates, window=None):
    """The iterates whose time index lies in [αT, βT]."""
    alpha, beta = resolve(window, 'MID_WINDOW')
    T = len(iterates) - 1
    return [item for item in iterates if alpha * T <= item.t <= beta * T]


def iterate_theta_map(Abar, Bbar, theta, *, tol=None, max_iterations=None):
    """Limit of X ← Θ(X) started from X = θI."""
    tol = resolve(tol, 'STATIONARITY_TOL')
    max_iterations = resolve(max_iterations, 'MAX_ITERATIONS')
    bound = resolve(None, 'DIVERGENCE_BOUND')
    n = Abar.shape[0]
    X = theta * np.eye(n)
    monotone = True
    for iteration in range(1, max_iterations + 1):
        X_next = theta_map(X, Abar, Bbar, theta)
        scale = 1.0 + np.linalg.norm(X)
        if monotone and min_eig_sym(X_next - X) < -MONOTONE_ATOL * scale:
            monotone = False
            logger.warning("Theta iterates stopped increasing at iteration %d", iteration)
        if np.linalg.norm(X_next) > bound:
            raise NoConvergence(f"Theta iterates exceeded {bound:.3g}", iterations=iteration,
                                last_iterate=X_next, operation='iterate_theta_map')
        change = np.linalg.norm(X_next - X)
        X = X_next
        if change <= tol * scale:
            residual = float(np.linalg.norm(theta_map(X, Abar, Bbar, theta) - X))
            return BackwardLimit(X=X, OmegaInv=symmetrize(X - theta * np.eye(n)), iterations=iteration,
                                 monotone=monotone, residual=residual)
    raise NoConvergence(f"Theta iterates did not settle after {max_iterations} iterations",
                        iterations=max_iterations, last_iterate=X, operation='iterate_theta_map')


def steady_backward(ss, tol=None, *, certificate=None, force=False, max_iterations=None):
    """Stationary backward limit X = Θ(X) for a steady robust filter.

    Refuses with :class:`NotCertified` unless the convergence certificate
    holds; ``force`` iterates anyway and only logs a warning.
    """
    if certificate is None:
        certificate = certify(ss)
    if not certificate.holds:
        if not force:
            raise NotCertified(
                f"no rho in (1, {certificate.rho_upper:.6g}) certifies convergence "
                f"(best margin {certificate.margin:.3g} at rho={certificate.rho:.6g})",
                certificate=certificate, operation='steady_backward')
        logger.warning("iterating Theta without a convergence certificate (margin %.3g)", certificate.margin)

    limit = iterate_theta_map(ss.Abar, ss.Bbar, ss.theta, tol=tol, max_iterations=max_iterations)
    if limit.residual > resolve(None, 'RESIDUAL_TOL') * (1.0 + np.linalg.norm(limit.X)):
        raise NoConvergence(f"X = Theta(X) residual {limit.residual:.3g} above tolerance",
                            iterations=limit.iterations, last_iterate=limit.X, operation='steady_backward')
    logger.info("backward limit after %d iterations, |Omega^-1|=%.6g",
                limit.iterations, np.linalg.norm(limit.OmegaInv))
    return limit


def rho_bounds(Abar):
    radius = spectral_radius(Abar)
    cap = resolve(None, 'RHO_CAP')
    upper = cap if radius <= 1.0 / cap else min((1.0 - RHO_EDGE) / radius, cap)
    return 1.0 + RHO_EDGE, upper


def sigma_rho(Abar, theta, rho):
    """Σ_ρ solving Σ = ρ²ĀᵀΣĀ + θI."""
    return solve_stein(rho * Abar, theta * np.eye(Abar.shape[0]))


def certificate_margin(Abar, Bbar, theta, rho):
    """Minimum eigenvalue of (1 − ρ⁻²)Σ_ρ⁻¹ − B̄B̄ᵀ, −inf where Σ_ρ does not exist."""
    if theta == 0.0:
        return math.inf
    try:
        sigma = sigma_rho(Abar, theta, rho)
        inverse = guarded_inverse(sigma, 'certificate: Sigma_rho')
    except NumericalError:
        return -math.inf
    return min_eig_sym((1.0 - rho ** -2) * inverse - Bbar @ Bbar.T)


def certificate_sweep(Abar, Bbar, theta, rho_grid=None):
    """Margin over a log-spaced grid of ρ in (1, 1/σ(Ā))."""
    rho_grid = resolve(rho_grid, 'RHO_GRID')
    lower, upper = rho_bounds(Abar)
    rhos = np.geomspace(lower, upper, rho_grid)
    margins = np.array([certificate_margin(Abar, Bbar, theta, rho) for rho in rhos])
    return CertificateSweep(theta=theta, rhos=rhos, margins=margins)


def certificate_for(Abar, Bbar, theta, rho_grid=None):
    """Best certificate over the grid, refined by a bounded scalar search."""
    lower, upper = rho_bounds(Abar)
    n = Abar.shape[0]
    if theta == 0.0:
        return ConvergenceCertificate(rho=math.nan, SigmaRho=np.zeros((n, n)), margin=math.inf,
                                      holds=True, theta=theta, rho_upper=upper)

    sweep = certificate_sweep(Abar, Bbar, theta, rho_grid)
    k = int(np.argmax(sweep.margins))
    rho, margin = float(sweep.rhos[k]), float(sweep.margins[k])
    left, right = sweep.rhos[max(k - 1, 0)], sweep.rhos[min(k + 1, len(sweep.rhos) - 1)]
    if right > left and math.isfinite(margin):
        result = minimize_scalar(lambda r: -certificate_margin(Abar, Bbar, theta, r),
                                 bounds=(left, right), method='bounded', options={'xatol': 1e-10})
        if result.success and -result.fun > margin:
            rho, margin = float(result.x), float(-result.fun)

    sigma = sigma_rho(Abar, theta, rho) if math.isfinite(margin) else np.full((n, n), math.nan)
    certificate = ConvergenceCertificate(rho=rho, SigmaRho=sigma, margin=margin, holds=margin >= 0.0,
                                         theta=theta, rho_upper=upper)
    logger.info("certificate rho=%.6g margin=%.6g holds=%s", rho, margin, certificate.holds)
    return certificate


def certify(ss, rho_grid=None):
    return certificate_for(ss.Abar, ss.Bbar, ss.theta, rho_grid)


def stabilizing_check(X, Abar, Bbar):
    """Stability of Āᵀ − JB̄ᵀ with J = ĀᵀXB̄(B̄ᵀXB̄ − I)⁻¹."""
    m = Bbar.shape[1]
    inner = guarded_inverse(Bbar.T @ X @ Bbar - np.eye(m), 'stabilizing_check: Bbar^T X Bbar - I')
    J = Abar.T @ X @ Bbar @ inner
    M = Abar.T - J @ Bbar.T
    eigenvalues = linalg.eigvals(M)
    eigenvalues = eigenvalues[np.argsort(-np.abs(eigenvalues), kind='stable')]
    if np.allclose(eigenvalues.imag, 0.0):
        eigenvalues = eigenvalues.real
    return StabilizingCheck(J=J, M=M, eigenvalues=eigenvalues, stable=bool(np.max(np.abs(eigenvalues)) < 1.0))


def _assemble_blocks(model, G, theta, X, OmegaInv, stationary):
    Abar = model.A - G @ model.C
    Bbar = model.B - G @ model.D
    inner = symmetrize(np.eye(model.m) - Bbar.T @ X @ Bbar)
    symmetric_factor(inner)
    Ktil = guarded_inverse(inner, 'assemble: I - Bbar^T X Bbar')
    L = symmetric_factor(Ktil)
    H = Ktil @ Bbar.T @ X @ Abar

    zero = np.zeros((model.n, model.n))
    Atil = np.block([[model.A, model.B @ H], [zero, Abar + Bbar @ H]])
    Btil = np.vstack([model.B, Bbar]) @ L
    Ctil = np.hstack([model.C, model.D @ H])
    Dtil = model.D @ L
    return LeastFavorableModel(Atil=Atil, Btil=Btil, Ctil=Ctil, Dtil=Dtil, H=H, Ktil=Ktil, L=L,
                               OmegaInvLimit=OmegaInv, stationary=stationary, P0=model.P0,
                               theta=theta, G=G)


def assemble(model, ss, X):
    """Stationary least favorable model from the steady filter and X = Ω⁻¹ + θI."""
    X = symmetrize(X)
    OmegaInv = symmetrize(X - ss.theta * np.eye(model.n))
    return _assemble_blocks(model, ss.G, ss.theta, X, OmegaInv, stationary=True)


def assemble_time_varying(model, steps, backward):
    """Least favorable models for t = 0..T−1.

    Element t combines G_t with X_{t+1} = Ω_{t+1}⁻¹ + θ_t I.
    """
    steps = list(steps)
    backward = list(backward)
    if len(steps) != len(backward):
        raise DimensionMismatch(f"{len(steps)} forward steps against {len(backward)} backward iterates",
                                operation='assemble_time_varying')
    return [
        _assemble_blocks(model, steps[t].G, backward[t + 1].theta, backward[t + 1].X,
                         backward[t + 1].OmegaInv, stationary=False)
        for t in range(len(steps) - 1)
    ]


def _feedback(abar, bbar, x):
    if abar == 0.0:
        return 0.0, 0.0
    j = abar * x * bbar / (bbar ** 2 * x - 1.0)
    return j, abar - j * bbar


def scalar_oracle(abar, bbar, theta, *, tol=None, max_iterations=None):
    """Closed-form roots of the scalar stationary backward equation."""
    a = bbar ** 2
    coefficient = 1.0 - abar ** 2 + a * theta
    discriminant = coefficient ** 2 - 4.0 * a * theta
    if a == 0.0 or discriminant <= 0.0 or theta <= 0.0:
        raise NoRealRoots(
            f"b^2 x^2 - {coefficient:.6g} x + {theta:.6g} has no two distinct positive roots "
            f"(discriminant {discriminant:.6g})", operation='scalar_oracle')
    x1 = (coefficient + math.sqrt(discriminant)) / (2.0 * a)
    x2 = theta / (a * x1)
    _, f1 = _feedback(abar, bbar, x1)
    _, f2 = _feedback(abar, bbar, x2)

    limit = iterate_theta_map(np.array([[abar]]), np.array([[bbar]]), theta,
                              tol=tol, max_iterations=max_iterations)
    return ScalarRootAnalysis(
        abar=abar, bbar=bbar, theta=theta, x1=x1, x2=x2, f1=f1, f2=f2,
        iteration_limit=float(limit.X[0, 0]), discriminant=discriminant,
        coefficient=coefficient, text_coefficient=1.0 - abar ** 2 - a * theta)


def simulate_lf(lf, T, seed, paths=1):
    """Sample paths of a stationary least favorable model.

    ξ_0 = [x_0; 0] with x_0 ~ N(0, P0); ε_t is unit-variance white noise
    shared by the state and observation equations.
    """
    if not lf.stationary:
        raise InputError("a time-varying least favorable model cannot be simulated", operation='simulate_lf')
    rng = np.random.default_rng(seed)
    n, m = lf.n, lf.m
    states = np.zeros((paths, T + 1, 2 * n))
    observations = np.zeros((paths, T, lf.p))
    states[:, 0, :n] = rng.standard_normal((paths, n)) @ covariance_factor(lf.P0).T
    for t in range(T):
        eps = rng.standard_normal((paths, m))
        xi = states[:, t]
        observations[:, t] = xi @ lf.Ctil.T + eps @ lf.Dtil.T
        states[:, t + 1] = xi @ lf.Atil.T + eps @ lf.Btil.T
    return LFTrajectory(states=states, observations=observations, seed=seed)
