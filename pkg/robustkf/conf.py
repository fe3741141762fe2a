from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


DEFAULTS = {
    'STEIN_DIRECT_MAX_DIM': 50,
    'SINGULAR_RTOL': 1e-12,
    'PD_ATOL': 1e-14,
    'RANK_RTOL': 1e-10,
    'THETA_MAX_BISECTIONS': 200,
    'THETA_TOL': 1e-10,
    'DEGENERATE_C': 1e-13,
    'STATIONARITY_TOL': 1e-12,
    'STATIONARY_STEPS': 10,
    'DIVERGENCE_BOUND': 1e12,
    'MAX_ITERATIONS': 100000,
    'RESIDUAL_TOL': 1e-10,
    'RHO_GRID': 512,
    'RHO_CAP': 1e6,
    'MID_WINDOW': (0.4, 0.6),
    'C_MAX_BRACKET': (1e-6, 10.0),
    'C_MAX_PROBES': 30,
    'C_MAX_PROBE_HORIZON': 5000,
    'C_MAX_CRITERION': 'certified',
    'COMPARE_HORIZON': 2000,
    'OUTPUT_DIR': Path('results'),
}


def robustkf_setting(name):
    """Look up a ``ROBUSTKF`` setting, falling back to the built-in default.

    The library modules are usable without a configured Django project; in
    that case only the defaults apply.
    """
    try:
        overrides = getattr(settings, 'ROBUSTKF', {})
    except ImproperlyConfigured:
        overrides = {}
    if name in overrides:
        return overrides[name]
    return DEFAULTS[name]


def resolve(value, name):
    """Return ``value`` unless it is None, else the named setting."""
    return robustkf_setting(name) if value is None else value
