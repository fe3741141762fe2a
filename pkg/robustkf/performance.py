"""Prediction error of Luenberger-type filters under the least favorable model.

For a filter x̂′_{t+1} = A x̂′_t + G′(y_t − C x̂′_t) run on data from the
stationary least favorable model, the stacked error obeys

    e_{t+1} = F e_t + M ε_t,   F = Ã − [G′; 0]C̃,   M = B̃ − [G′; 0]D̃

and its covariance Π_t follows Π_{t+1} = FΠ_tFᵀ + MMᵀ from Π_0 = I₂ ⊗ V₀.
The first n components are the filter's prediction error e′_t.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .conf import resolve
from .exceptions import DimensionMismatch, NotStable
from .least_favorable import assemble, certify, steady_backward
from .numerics import covariance_factor, solve_stein, spectral_radius, symmetrize
from .robust_filter import steady_state
from .statespace import kalman_steady


logger = logging.getLogger(__name__)


def to_db(variance):
    with np.errstate(divide='ignore'):
        return 10.0 * np.log10(variance)


@dataclass(frozen=True)
class ErrorSystem:
    F: np.ndarray
    M: np.ndarray
    Pi0: np.ndarray
    Gprime: np.ndarray

    @property
    def n(self):
        return self.F.shape[0] // 2


@dataclass(frozen=True)
class PerformanceReport:
    Pi_trajectory: np.ndarray
    Pi_steady: np.ndarray
    gain: np.ndarray

    @property
    def n(self):
        return self.Pi_steady.shape[0] // 2

    @property
    def component_variances(self):
        return np.diag(self.Pi_steady)[:self.n].copy()

    @property
    def component_variances_db(self):
        return to_db(self.component_variances)

    @property
    def variance_trajectory(self):
        """Variances of e′_t for every t in the recursion, shape (T + 1, n)."""
        return np.diagonal(self.Pi_trajectory, axis1=1, axis2=2)[:, :self.n].copy()

    @property
    def variance_trajectory_db(self):
        return to_db(self.variance_trajectory)


@dataclass(frozen=True)
class MonteCarloPlan:
    N: int
    T: int
    seed: int


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Per-time sample statistics of e′_t over N simulated error paths."""
    N: int
    seed: int
    means: np.ndarray
    mean_stderr: np.ndarray
    variances: np.ndarray
    variance_stderr: np.ndarray

    @property
    def T(self):
        return self.variances.shape[0] - 1

    @property
    def final_variances(self):
        return self.variances[-1]

    @property
    def final_stderr(self):
        return self.variance_stderr[-1]


@dataclass(frozen=True)
class ComparisonReport:
    c: float
    theta: float
    kalman: PerformanceReport
    robust: PerformanceReport
    lf: object
    monte_carlo: dict = field(default_factory=dict)

    @property
    def gap_db(self):
        """Steady Kalman minus robust variance per component; positive when the robust filter is better."""
        return self.kalman.component_variances_db - self.robust.component_variances_db


def error_system(lf, Gprime, V0=None):
    V0 = lf.P0 if V0 is None else symmetrize(V0)
    Gprime = np.atleast_2d(np.asarray(Gprime, dtype=float))
    n, p = lf.n, lf.p
    if Gprime.shape != (n, p):
        raise DimensionMismatch(f"gain must be {(n, p)}, got {Gprime.shape}", operation='error_system')
    if V0.shape != (n, n):
        raise DimensionMismatch(f"V0 must be {(n, n)}, got {V0.shape}", operation='error_system')
    injection = np.vstack([Gprime, np.zeros((n, p))])
    return ErrorSystem(
        F=lf.Atil - injection @ lf.Ctil,
        M=lf.Btil - injection @ lf.Dtil,
        Pi0=np.kron(np.eye(2), V0),
        Gprime=Gprime,
    )


def lyapunov_recursion(es, T, *, divergence_bound=None):
    """Π_0..Π_T; cut short with a warning if the trace passes the divergence bound."""
    bound = resolve(divergence_bound, 'DIVERGENCE_BOUND')
    noise = es.M @ es.M.T
    trajectory = [es.Pi0]
    for t in range(T):
        Pi = symmetrize(es.F @ trajectory[-1] @ es.F.T + noise)
        if not np.isfinite(np.trace(Pi)) or np.trace(Pi) > bound:
            logger.warning("error covariance trace exceeded %.3g at t=%d; the gain does not stabilize F",
                           bound, t + 1)
            break
        trajectory.append(Pi)
    return np.stack(trajectory)


def steady_variance(es):
    radius = spectral_radius(es.F)
    if radius >= 1.0:
        raise NotStable(f"error dynamics have spectral radius {radius:.6g}", radius=radius,
                        operation='steady_variance')
    return solve_stein(es.F.T, es.M @ es.M.T)


def performance_report(es, T):
    return PerformanceReport(Pi_trajectory=lyapunov_recursion(es, T), Pi_steady=steady_variance(es),
                             gain=es.Gprime)


def simulate_errors(es, N, T, seed):
    rng = np.random.default_rng(seed)
    n = es.n
    means = np.empty((T + 1, n))
    mean_stderr = np.empty((T + 1, n))
    variances = np.empty((T + 1, n))
    variance_stderr = np.empty((T + 1, n))

    errors = rng.standard_normal((N, 2 * n)) @ covariance_factor(es.Pi0).T
    for t in range(T + 1):
        head = errors[:, :n]
        centered = head - head.mean(axis=0)
        squares = centered ** 2
        means[t] = head.mean(axis=0)
        variances[t] = squares.sum(axis=0) / (N - 1)
        mean_stderr[t] = np.sqrt(variances[t] / N)
        variance_stderr[t] = squares.std(axis=0, ddof=1) / np.sqrt(N)
        if t < T:
            errors = errors @ es.F.T + rng.standard_normal((N, es.M.shape[1])) @ es.M.T
    return MonteCarloEstimate(N=N, seed=seed, means=means, mean_stderr=mean_stderr,
                              variances=variances, variance_stderr=variance_stderr)


def monte_carlo_check(lf, Gprime, N, T, seed, *, V0=None):
    """Sample statistics of e′_t from N simulated paths with e_0 ~ N(0, Π_0)."""
    return simulate_errors(error_system(lf, Gprime, V0), N, T, seed)


def compare_synthesized(model, lf, c, T=None, *, mc=None, kalman_gain=None):
    """Kalman against robust filter under an already synthesized least favorable model."""
    T = resolve(T, 'COMPARE_HORIZON')
    if kalman_gain is None:
        kalman_gain, _ = kalman_steady(model)
    systems = {
        'kalman': error_system(lf, kalman_gain, model.P0),
        'robust': error_system(lf, lf.G, model.P0),
    }
    reports = {name: performance_report(es, T) for name, es in systems.items()}
    monte_carlo = {}
    if mc is not None:
        monte_carlo = {name: simulate_errors(es, mc.N, mc.T, mc.seed) for name, es in systems.items()}
    report = ComparisonReport(c=c, theta=lf.theta, kalman=reports['kalman'], robust=reports['robust'],
                              lf=lf, monte_carlo=monte_carlo)
    logger.info("steady variance gap (dB): %s", np.array2string(report.gap_db, precision=4))
    return report


def compare(model, c, T=None, *, rho_grid=None, mc=None, force=False):
    """Full pipeline: steady robust filter, least favorable model, both error systems."""
    ss = steady_state(model, c)
    limit = steady_backward(ss, certificate=certify(ss, rho_grid), force=force)
    lf = assemble(model, ss, limit.X)
    return compare_synthesized(model, lf, c, T, mc=mc)
