import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from rest_framework.utils.encoders import JSONEncoder

from . import __version__
from .serializers import (
    CertificateSerializer,
    CMaxSerializer,
    GapSerializer,
    LeastFavorableModelSerializer,
    StabilizingSerializer,
    SteadyStateSerializer,
)


logger = logging.getLogger(__name__)

VEC_NOTE = "matrices flattened column-major: X_ij is row i, column j (1-based), j varies slowest"


def _finite(value):
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def vec_columns(name, shape):
    rows, cols = shape
    return [f"{name}_{i + 1}{j + 1}" for j in range(cols) for i in range(rows)]


def vec(M):
    return np.asarray(M, dtype=float).reshape(-1, order='F')


class ResultWriter:
    """Writes result tables (CSV) and documents (JSON) into one output directory.

    Every JSON document carries the scenario digest and library version.
    """

    def __init__(self, out_dir, scenario):
        self.out_dir = Path(out_dir)
        self.scenario = scenario
        self.written = []

    def _path(self, name):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_json(self, name, data):
        document = {'scenario_hash': self.scenario.digest, 'version': __version__}
        document.update(data)
        text = json.dumps(_finite(json.loads(json.dumps(document, cls=JSONEncoder))), indent=2,
                          sort_keys=False, allow_nan=False)
        path = self._path(name)
        path.write_text(text + '\n', encoding='utf-8', newline='\n')
        self._record(path)
        return path

    def write_csv(self, name, frame, comment):
        path = self._path(name)
        with path.open('w', encoding='utf-8', newline='') as handle:
            handle.write(f"# {comment}\n")
            frame.to_csv(handle, index=False, float_format='%.17g', lineterminator='\n')
        self._record(path)
        return path

    def _record(self, path):
        self.written.append(path)
        logger.info("wrote %s", path)

    # analysis

    def forward_trajectory(self, run):
        n, p = run.steps[0].G.shape
        columns = ['t'] + vec_columns('P', (n, n)) + ['theta'] + vec_columns('V', (n, n)) + vec_columns('G', (n, p))
        rows = [
            np.concatenate([[step.t], vec(step.P), [step.theta], vec(step.V), vec(step.G)])
            for step in run.steps
        ]
        frame = pd.DataFrame(rows, columns=columns).astype({'t': int})
        return self.write_csv(
            'forward_trajectory.csv', frame,
            f"forward robust recursion, c={run.c!r}; theta on row t produced V_t from P_t; {VEC_NOTE}")

    def steady_state(self, ss):
        return self.write_json('steady_state.json', SteadyStateSerializer(ss).data)

    def c_max(self, estimate):
        return self.write_json('c_max.json', CMaxSerializer(estimate).data)

    # synthesis

    def backward_trajectory(self, backward):
        n = backward[0].OmegaInv.shape[0]
        columns = ['t'] + vec_columns('OmegaInv', (n, n))
        rows = [np.concatenate([[item.t], vec(item.OmegaInv)]) for item in backward]
        frame = pd.DataFrame(rows, columns=columns).astype({'t': int})
        return self.write_csv('backward_trajectory.csv', frame,
                              f"backward recursion from Omega_T^-1 = 0; {VEC_NOTE}")

    def certificate(self, certificate):
        return self.write_json('certificate.json', CertificateSerializer(certificate).data)

    def lf_model(self, lf, limit):
        data = dict(LeastFavorableModelSerializer(lf).data)
        data['backward_iterations'] = limit.iterations
        data['backward_monotone'] = limit.monotone
        data['backward_residual'] = limit.residual
        return self.write_json('lf_model.json', data)

    def stabilizing(self, check):
        return self.write_json('stabilizing.json', StabilizingSerializer(check).data)

    # comparison

    def compare(self, report):
        kalman = report.kalman.variance_trajectory_db
        robust = report.robust.variance_trajectory_db
        length = min(len(kalman), len(robust))
        n = kalman.shape[1]
        frame = pd.DataFrame({'t': np.arange(length)})
        for name, values in (('kalman', kalman), ('robust', robust)):
            for i in range(n):
                frame[f"var_{name}_{i + 1}_db"] = values[:length, i]
        for name, estimate in report.monte_carlo.items():
            for i in range(n):
                variances = np.full(length, np.nan)
                stderr = np.full(length, np.nan)
                k = min(length, estimate.T + 1)
                variances[:k] = estimate.variances[:k, i]
                stderr[:k] = estimate.variance_stderr[:k, i]
                frame[f"mc_var_{name}_{i + 1}"] = variances
                frame[f"mc_se_{name}_{i + 1}"] = stderr
        return self.write_csv(
            'compare.csv', frame,
            "prediction error variances under the least favorable model, 10*log10 for *_db columns; "
            "mc_* columns are linear-scale Monte Carlo variances and standard errors")

    def gap(self, report):
        return self.write_json('gap.json', GapSerializer(report).data)

    def certificate_sweep(self, sweep):
        frame = pd.DataFrame({'rho': sweep.rhos, 'min_eigenvalue': sweep.margins})
        return self.write_csv('certificate_sweep.csv', frame,
                              f"minimum eigenvalue of (1 - rho^-2) Sigma_rho^-1 - Bbar Bbar^T, theta={sweep.theta!r}")
