import numpy as np

from ..statespace import StateSpaceModel


# 0.1879 when the divergence is taken without the ½ factor
EXAMPLE_C_MAX = 0.09395


def two_state_model():
    """Two-state example with the scalar measurement noise embedded as a third channel."""
    return StateSpaceModel(
        A=[[0.1, 1.0], [0.0, 1.2]],
        B=[[0.01, 0.0, 0.0], [0.0, 0.01, 0.0]],
        C=[[1.0, -1.0]],
        D=[[0.0, 0.0, 0.04]],
    )


def scalar_model(a=0.5, b=1.0, c=1.0, d=1.0, P0=1.0):
    return StateSpaceModel(A=[[a]], B=[[b, 0.0]], C=[[c]], D=[[0.0, d]], P0=[[P0]])


def random_psd(rng, n, *, floor=0.0, scale=1.0):
    W = rng.standard_normal((n, n))
    return scale * (W @ W.T) / n + floor * np.eye(n)


def random_stable(rng, n, radius=0.9):
    A = rng.standard_normal((n, n))
    return radius * A / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)


def scenario_data(**overrides):
    data = {
        'model': {
            'A': [[0.1, 1.0], [0.0, 1.2]],
            'B': [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0]],
            'C': [[1.0, -1.0]],
            'D': [[0.0, 0.0, 0.04]],
        },
        'c': 0.1,
        'T': 60,
        'rho_grid': 64,
    }
    data.update(overrides)
    return data
