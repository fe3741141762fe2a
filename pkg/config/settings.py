"""
Django settings for the robust filtering project.

The project has no web surface: it hosts the ``robustkf`` app, whose
management commands are the batch front-end. Numerical knobs live in the
``ROBUSTKF`` dictionary below.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv(
    'DJANGO_SECRET_KEY',
    'django-insecure-robustkf-batch-only-key-not-used-for-signing',
)

DEBUG = os.getenv('DJANGO_DEBUG', 'false').lower() in ('1', 'true', 'yes')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'robustkf',
]

# Results are written as files; nothing is persisted in a database.
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'robustkf': {
            'handlers': ['console'],
            'level': os.getenv('ROBUSTKF_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


ROBUSTKF = {
    # numerics
    'STEIN_DIRECT_MAX_DIM': 50,
    'SINGULAR_RTOL': 1e-12,
    'PD_ATOL': 1e-14,
    'RANK_RTOL': 1e-10,
    # risk parameter
    'THETA_MAX_BISECTIONS': 200,
    'THETA_TOL': 1e-10,
    'DEGENERATE_C': 1e-13,
    # recursions
    'STATIONARITY_TOL': 1e-12,
    'STATIONARY_STEPS': 10,
    'DIVERGENCE_BOUND': 1e12,
    'MAX_ITERATIONS': 100000,
    'RESIDUAL_TOL': 1e-10,
    # least favorable model
    'RHO_GRID': 512,
    'RHO_CAP': 1e6,
    'MID_WINDOW': (0.4, 0.6),
    # tolerance ceiling probing
    'C_MAX_BRACKET': (1e-6, 10.0),
    'C_MAX_PROBES': 30,
    'C_MAX_PROBE_HORIZON': 5000,
    'C_MAX_CRITERION': 'certified',
    # batch outputs
    'COMPARE_HORIZON': 2000,
    'OUTPUT_DIR': Path(os.getenv('ROBUSTKF_OUTPUT_DIR', BASE_DIR / 'results')),
}
