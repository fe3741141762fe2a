"""Forward robust Kalman recursion under a Kullback-Leibler tolerance c.

    G_t     = A V_t Cᵀ (C V_t Cᵀ + DDᵀ)⁻¹
    x̂_{t+1} = A x̂_t + G_t (y_t − C x̂_t)
    P_{t+1} = A (V_t⁻¹ + Cᵀ(DDᵀ)⁻¹C)⁻¹ Aᵀ + BBᵀ
    V_{t+1} = (P_{t+1}⁻¹ − θ_t I)⁻¹,   c = γ(P_{t+1}, θ_t)

with x̂_0 = 0 and V_0 = P_0. At c = 0 this is the Kalman predictor.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import resolve
from .divergence import solve_theta
from .exceptions import (
    BracketInvalid,
    DimensionMismatch,
    Diverged,
    NoConvergence,
    NumericalError,
    NotStable,
)
from .least_favorable import certify
from .numerics import as_matrix, guarded_inverse, spectral_radius, symmetrize
from .statespace import predictor_gain, predictor_update


logger = logging.getLogger(__name__)

PROBE_SCALES = (1.0, 0.1, 10.0)


@dataclass(frozen=True)
class RobustFilterStep:
    """State of the recursion at time t.

    ``theta`` is θ_{t−1}, the risk parameter that inflated P_t into V_t
    (zero at t = 0, where V_0 = P_0). ``G`` is computed from ``V``.
    """
    t: int
    P: np.ndarray
    V: np.ndarray
    theta: float
    G: np.ndarray


@dataclass(frozen=True)
class ForwardRun:
    c: float
    steps: tuple
    converged: bool
    converged_at: int = None

    @property
    def T(self):
        return len(self.steps) - 1

    @property
    def gains(self):
        return np.stack([step.G for step in self.steps])

    @property
    def thetas(self):
        return np.array([step.theta for step in self.steps])

    @property
    def last(self):
        return self.steps[-1]


@dataclass(frozen=True)
class SteadyState:
    P: np.ndarray
    V: np.ndarray
    theta: float
    G: np.ndarray
    Abar: np.ndarray
    Bbar: np.ndarray
    iterations: int
    c: float
    residual: float

    @property
    def closed_loop_radius(self):
        return spectral_radius(self.Abar)


def initial_step(model, P0=None):
    P0 = model.P0 if P0 is None else symmetrize(P0)
    return RobustFilterStep(t=0, P=P0, V=P0, theta=0.0, G=predictor_gain(model, P0))


def inflate(P, theta):
    """V = (P⁻¹ − θI)⁻¹, evaluated as P (I − θP)⁻¹ so a singular P is fine."""
    if theta == 0.0:
        return P
    n = P.shape[0]
    return symmetrize(P @ guarded_inverse(np.eye(n) - theta * P, 'inflate: I - theta P'))


def risk_parameter(P, c, *, degenerate_c=None):
    if c <= resolve(degenerate_c, 'DEGENERATE_C') or not np.any(P):
        return 0.0
    return solve_theta(P, c).theta


def forward_step(prev, model, c):
    """Advance the robust recursion from time t to t + 1."""
    _, P_next = predictor_update(model, prev.V)
    theta = risk_parameter(P_next, c)
    V_next = inflate(P_next, theta)
    return RobustFilterStep(t=prev.t + 1, P=P_next, V=V_next, theta=theta, G=predictor_gain(model, V_next))


def _relative_change(new, old):
    return float(np.linalg.norm(new - old) / (1.0 + np.linalg.norm(old)))


def run_forward(model, P0, c, T, *, stop_on_convergence=False, tol=None, stationary_steps=None,
                divergence_bound=None):
    """T steps of :func:`forward_step` from V_0 = P_0.

    Convergence is declared once the relative Frobenius change of P_t stays
    below ``tol`` for ``stationary_steps`` consecutive steps.
    """
    tol = resolve(tol, 'STATIONARITY_TOL')
    stationary_steps = resolve(stationary_steps, 'STATIONARY_STEPS')
    bound = resolve(divergence_bound, 'DIVERGENCE_BOUND')

    steps = [initial_step(model, P0)]
    streak = 0
    converged_at = None
    for _ in range(T):
        step = forward_step(steps[-1], model, c)
        if not np.all(np.isfinite(step.P)) or np.linalg.norm(step.P) > bound:
            raise Diverged(f"|P_t| exceeded {bound:.3g} at t={step.t}", t=step.t, operation='run_forward')
        streak = streak + 1 if _relative_change(step.P, steps[-1].P) < tol else 0
        steps.append(step)
        if converged_at is None and streak >= stationary_steps:
            converged_at = step.t
            if stop_on_convergence:
                break
    return ForwardRun(c=c, steps=tuple(steps), converged=converged_at is not None, converged_at=converged_at)


def riccati_residual(model, P, theta):
    """Frobenius residual of P = A(P⁻¹ − θI + Cᵀ(DDᵀ)⁻¹C)⁻¹Aᵀ + BBᵀ."""
    _, image = predictor_update(model, inflate(P, theta))
    return float(np.linalg.norm(P - image))


def steady_state(model, c, tol=None, *, P0=None, max_iterations=None):
    """Fixed point of the forward recursion at tolerance c."""
    max_iterations = resolve(max_iterations, 'MAX_ITERATIONS')
    run = run_forward(model, P0, c, max_iterations, stop_on_convergence=True, tol=tol)
    if not run.converged:
        last = run.last
        raise NoConvergence(
            f"forward recursion not stationary after {max_iterations} steps "
            f"(theta={last.theta:.6g}, |P|={np.linalg.norm(last.P):.6g})",
            iterations=max_iterations, last_iterate=last.P, operation='steady_state')

    P = run.last.P
    theta = risk_parameter(P, c)
    V = inflate(P, theta)
    G = predictor_gain(model, V)
    Abar = model.A - G @ model.C
    Bbar = model.B - G @ model.D

    radius = spectral_radius(Abar)
    if radius >= 1.0:
        raise NotStable(f"A - GC has spectral radius {radius:.6g}", radius=radius, operation='steady_state')
    residual = riccati_residual(model, P, theta)
    if residual > resolve(None, 'RESIDUAL_TOL') * (1.0 + np.linalg.norm(P)):
        raise NoConvergence(
            f"Riccati residual {residual:.3g} above tolerance",
            iterations=run.converged_at, last_iterate=P, operation='steady_state')

    logger.debug("steady state c=%.6g theta=%.6g after %d steps, radius(A-GC)=%.6g",
                 c, theta, run.converged_at, radius)
    return SteadyState(P=P, V=V, theta=theta, G=G, Abar=Abar, Bbar=Bbar,
                       iterations=run.converged_at, c=c, residual=residual)


def converges_at(model, c, *, criterion=None, horizon=None):
    """Whether tolerance c is admissible for the model under ``criterion``.

    ``"forward"``: the recursion converges from I, 0.1·I and 10·I and A − GC
    is stable. ``"certified"``: additionally the least favorable convergence
    certificate holds at the steady state.
    """
    criterion = resolve(criterion, 'C_MAX_CRITERION')
    horizon = resolve(horizon, 'C_MAX_PROBE_HORIZON')
    eye = np.eye(model.n)
    try:
        for scale in PROBE_SCALES:
            run = run_forward(model, scale * eye, c, horizon, stop_on_convergence=True)
            if not run.converged:
                return False
        ss = steady_state(model, c, max_iterations=horizon)
    except NumericalError as exc:
        logger.debug("c=%.6g not admissible: %s", c, exc)
        return False
    if criterion == 'forward':
        return True
    if criterion == 'certified':
        return certify(ss).holds
    raise ValueError(f"unknown c_max criterion {criterion!r}")


@dataclass(frozen=True)
class CMaxEstimate:
    """Empirical tolerance ceiling found by convergence probing.

    ``c_max`` is the largest probed tolerance that converged and ``upper``
    the smallest that failed; ``saturated`` means the whole bracket
    converged and ``c_max`` is just its upper end.
    """
    c_max: float
    upper: float
    saturated: bool
    bracket: tuple
    probes: int
    criterion: str
    method: str = 'empirical convergence probing'


def estimate_c_max(model, bracket=None, probes=None, *, criterion=None, horizon=None):
    c_lo, c_hi = resolve(bracket, 'C_MAX_BRACKET')
    probes = resolve(probes, 'C_MAX_PROBES')
    criterion = resolve(criterion, 'C_MAX_CRITERION')
    if not 0 < c_lo < c_hi:
        raise BracketInvalid(f"bracket ({c_lo}, {c_hi}) must satisfy 0 < c_lo < c_hi",
                             operation='estimate_c_max')

    def admissible(c):
        return converges_at(model, c, criterion=criterion, horizon=horizon)

    if not admissible(c_lo):
        raise BracketInvalid(f"the recursion already fails at c_lo={c_lo}", operation='estimate_c_max')
    if admissible(c_hi):
        logger.info("estimate_c_max: whole bracket (%g, %g) admissible", c_lo, c_hi)
        return CMaxEstimate(c_max=c_hi, upper=c_hi, saturated=True, bracket=(c_lo, c_hi),
                            probes=0, criterion=criterion)

    lo, hi = c_lo, c_hi
    for _ in range(probes):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    logger.info("estimate_c_max (%s): c_max in [%.6g, %.6g]", criterion, lo, hi)
    return CMaxEstimate(c_max=lo, upper=hi, saturated=False, bracket=(c_lo, c_hi),
                        probes=probes, criterion=criterion)


def filter_observations(gains, model, y):
    """State estimates x̂_0..x̂_T from x̂_0 = 0 for observations y_0..y_{T−1}.

    ``gains`` is either one constant n×p gain or a sequence of per-step gains
    at least as long as ``y``.
    """
    y = as_matrix(y, 'y')
    if y.shape[1] != model.p and y.shape[0] == model.p:
        y = y.T
    if y.shape[1] != model.p:
        raise DimensionMismatch(f"observations must have {model.p} columns, got {y.shape}",
                                operation='filter_observations')
    gains = np.asarray(gains, dtype=float)
    if gains.ndim == 2:
        gains = np.broadcast_to(gains, (len(y),) + gains.shape)
    if gains.shape[0] < len(y) or gains.shape[1:] != (model.n, model.p):
        raise DimensionMismatch(f"gain schedule of shape {gains.shape} cannot filter {len(y)} observations",
                                operation='filter_observations')

    estimates = np.zeros((len(y) + 1, model.n))
    for t, y_t in enumerate(y):
        x_hat = estimates[t]
        estimates[t + 1] = model.A @ x_hat + gains[t] @ (y_t - model.C @ x_hat)
    return estimates
