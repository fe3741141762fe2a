"""Nominal state-space model: representation, validation, normalization.

    x_{t+1} = A x_t + B v_t
    y_t     = C x_t + D v_t

with v_t unit-variance white Gaussian noise and x_0 ~ N(0, P0).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .conf import resolve
from .exceptions import (
    DegenerateNoise,
    DimensionMismatch,
    InvalidCovariance,
    NotObservable,
    NotReachable,
)
from .numerics import as_matrix, guarded_inverse, is_psd, symmetric_factor, symmetrize


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P0: np.ndarray = field(default=None)

    def __post_init__(self):
        A = as_matrix(self.A, 'A')
        B = as_matrix(self.B, 'B')
        C = as_matrix(self.C, 'C')
        D = as_matrix(self.D, 'D')
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}", operation='StateSpaceModel')
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, A has {n}", operation='StateSpaceModel')
        if C.shape[1] != n:
            raise DimensionMismatch(f"C has {C.shape[1]} columns, A has {n}", operation='StateSpaceModel')
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(
                f"D must be {(C.shape[0], B.shape[1])}, got {D.shape}", operation='StateSpaceModel')

        P0 = np.eye(n) if self.P0 is None else as_matrix(self.P0, 'P0')
        if P0.shape != (n, n):
            raise DimensionMismatch(f"P0 must be {(n, n)}, got {P0.shape}", operation='StateSpaceModel')
        P0 = symmetrize(P0)
        if not is_psd(P0):
            raise InvalidCovariance("P0 must be positive semi-definite", operation='StateSpaceModel')

        for name, value in (('A', A), ('B', B), ('C', C), ('D', D), ('P0', P0)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def process_gram(self):
        return symmetrize(self.B @ self.B.T)

    @property
    def measurement_gram(self):
        return symmetrize(self.D @ self.D.T)

    @property
    def noise_stack(self):
        return np.vstack([self.B, self.D])

    def replace(self, **changes):
        values = {name: getattr(self, name) for name in ('A', 'B', 'C', 'D', 'P0')}
        values.update(changes)
        return StateSpaceModel(**values)


@dataclass(frozen=True)
class ValidationReport:
    n: int
    reachability_rank: int
    observability_rank: int

    @property
    def reachable(self):
        return self.reachability_rank == self.n

    @property
    def observable(self):
        return self.observability_rank == self.n

    @property
    def passes(self):
        return self.reachable and self.observable


def reachability_matrix(A, B):
    return np.hstack([B] + [np.linalg.matrix_power(A, i) @ B for i in range(1, A.shape[0])])


def observability_matrix(A, C):
    return np.vstack([C] + [C @ np.linalg.matrix_power(A, i) for i in range(1, A.shape[0])])


def numerical_rank(M, *, rtol=None):
    singular_values = linalg.svdvals(M)
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.sum(singular_values > resolve(rtol, 'RANK_RTOL') * singular_values[0]))


def validate(model, *, strict=True):
    """Rank tests for reachability of (A, B) and observability of (A, C)."""
    report = ValidationReport(
        n=model.n,
        reachability_rank=numerical_rank(reachability_matrix(model.A, model.B)),
        observability_rank=numerical_rank(observability_matrix(model.A, model.C)),
    )
    if strict and not report.reachable:
        raise NotReachable(
            f"reachability rank {report.reachability_rank} < {report.n}"
            + ("" if report.observable else f"; observability rank {report.observability_rank} < {report.n}"),
            report=report)
    if strict and not report.observable:
        raise NotObservable(f"observability rank {report.observability_rank} < {report.n}", report=report)
    return report


def _stack_is_square_invertible(model):
    stack = model.noise_stack
    return stack.shape[0] == stack.shape[1] and numerical_rank(stack) == stack.shape[0]


def normalize(model):
    """Rewrite the model so that B Dᵀ = 0 and [B; D] is square and invertible.

    Correlated noise is removed with Ǎ = A − A B Dᵀ(DDᵀ)⁻¹C and
    B̌B̌ᵀ = B(I − Dᵀ(DDᵀ)⁻¹D)Bᵀ; the noise channels are then compressed to
    n + p columns by the lower-triangular factor of the stacked Gram matrix.
    """
    R = model.measurement_gram
    if numerical_rank(R) < model.p:
        raise DegenerateNoise("D Dᵀ is singular", operation='normalize')

    cross = model.B @ model.D.T
    if np.linalg.norm(cross) <= 1e-12 and _stack_is_square_invertible(model):
        return model

    R_inv = guarded_inverse(R, 'normalize: D Dᵀ')
    A = model.A - model.A @ cross @ R_inv @ model.C
    projector = np.eye(model.m) - model.D.T @ R_inv @ model.D
    process = symmetrize(model.B @ projector @ model.B.T)

    gram = linalg.block_diag(process, R)
    size = model.n + model.p
    if numerical_rank(gram) < size:
        raise DegenerateNoise(
            f"noise Gram matrix has rank {numerical_rank(gram)} < {size}", operation='normalize')
    S = symmetric_factor(gram)
    logger.debug("normalize: compressed %d noise channels to %d", model.m, size)
    return StateSpaceModel(A=A, B=S[:model.n], C=model.C, D=S[model.n:], P0=model.P0)


def predictor_gain(model, V):
    """G = A V Cᵀ (C V Cᵀ + D Dᵀ)⁻¹."""
    innovation = symmetrize(model.C @ V @ model.C.T) + model.measurement_gram
    return linalg.solve(innovation, model.C @ V @ model.A.T, assume_a='pos').T


def predictor_update(model, V):
    """One covariance step P⁺ = A(V⁻¹ + Cᵀ(DDᵀ)⁻¹C)⁻¹Aᵀ + BBᵀ.

    Written in the inverse-free form A V Aᵀ − G(CVCᵀ + DDᵀ)Gᵀ + BBᵀ so that a
    singular V (for instance P0 = 0) is admissible. Returns (G, P⁺).
    """
    G = predictor_gain(model, V)
    innovation = symmetrize(model.C @ V @ model.C.T) + model.measurement_gram
    P_next = model.A @ V @ model.A.T - G @ innovation @ G.T + model.process_gram
    return G, symmetrize(P_next)


@dataclass(frozen=True)
class KalmanSchedule:
    gains: np.ndarray
    covariances: np.ndarray
    steady_gain: np.ndarray
    steady_covariance: np.ndarray


def kalman_steady(model, *, tol=None, max_iterations=None):
    """Steady Kalman predictor covariance P⁽⁰⁾ and gain G₀."""
    try:
        P = linalg.solve_discrete_are(model.A.T, model.C.T, model.process_gram, model.measurement_gram)
    except (ValueError, np.linalg.LinAlgError):
        logger.debug("solve_discrete_are failed, iterating the predictor recursion instead")
        P = _iterate_kalman(model, tol, max_iterations)
    P = symmetrize(P)
    return predictor_gain(model, P), P


def _iterate_kalman(model, tol, max_iterations):
    tol = resolve(tol, 'STATIONARITY_TOL')
    P = model.P0
    for _ in range(resolve(max_iterations, 'MAX_ITERATIONS')):
        _, P_next = predictor_update(model, P)
        if np.linalg.norm(P_next - P) <= tol * (1.0 + np.linalg.norm(P)):
            return P_next
        P = P_next
    return P


def kalman_gain_schedule(model, T):
    """Kalman predictor gains and covariances for t = 0..T from P0."""
    gains = np.empty((T + 1, model.n, model.p))
    covariances = np.empty((T + 1, model.n, model.n))
    P = model.P0
    for t in range(T + 1):
        G, P_next = predictor_update(model, P)
        gains[t] = G
        covariances[t] = P
        P = P_next
    steady_gain, steady_covariance = kalman_steady(model)
    return KalmanSchedule(gains, covariances, steady_gain, steady_covariance)
