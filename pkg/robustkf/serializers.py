import math

import numpy as np
from rest_framework import serializers

from .conf import robustkf_setting
from .exceptions import InputError
from .statespace import StateSpaceModel, normalize, validate


def _plain(value):
    """Nested lists of Python floats with non-finite entries as None."""
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class MatrixField(serializers.Field):
    """A real matrix written as nested JSON arrays.

    A bare number is read as 1×1 and a flat list as a single row.
    """
    default_error_messages = {
        'invalid': 'Expected a number or a rectangular array of numbers.',
        'not_finite': 'Matrix entries must be finite.',
        'empty': 'Matrix must not be empty.',
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        try:
            array = np.array(data, dtype=float)
        except (TypeError, ValueError):
            self.fail('invalid')
        if array.ndim > 2:
            self.fail('invalid')
        array = np.atleast_2d(array)
        if array.size == 0:
            self.fail('empty')
        if not np.all(np.isfinite(array)):
            self.fail('not_finite')
        return array

    def to_representation(self, value):
        return _plain(np.asarray(value, dtype=float))


class VectorField(serializers.Field):
    def to_representation(self, value):
        return _plain(np.asarray(value, dtype=float).ravel())


class EigenvalueField(serializers.Field):
    """Real spectra as a list of floats, complex ones as ``{"re": .., "im": ..}`` pairs."""

    def to_representation(self, value):
        value = np.asarray(value)
        if not np.iscomplexobj(value):
            return _plain(value.astype(float))
        return [{'re': _plain(float(z.real)), 'im': _plain(float(z.imag))} for z in value]


class RealField(serializers.FloatField):
    def to_representation(self, value):
        if value is None:
            return None
        return _plain(float(value))


class ToleranceField(serializers.Field):
    default_error_messages = {
        'invalid': 'Expected a positive number or "auto".',
    }

    def to_internal_value(self, data):
        if data == 'auto':
            return data
        if isinstance(data, bool) or not isinstance(data, (int, float)):
            self.fail('invalid')
        if not (math.isfinite(data) and data > 0):
            self.fail('invalid')
        return float(data)

    def to_representation(self, value):
        return value


class StateSpaceSerializer(serializers.Serializer):
    A = MatrixField()
    B = MatrixField()
    C = MatrixField()
    D = MatrixField()
    P0 = MatrixField(required=False)


class MonteCarloSerializer(serializers.Serializer):
    N = serializers.IntegerField(min_value=2)
    T = serializers.IntegerField(min_value=0)
    seed = serializers.IntegerField(min_value=0, required=False)


class CMaxOptionsSerializer(serializers.Serializer):
    bracket = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, required=False)
    probes = serializers.IntegerField(min_value=1, required=False)
    criterion = serializers.ChoiceField(choices=['forward', 'certified'], required=False)

    def validate_bracket(self, value):
        c_lo, c_hi = value
        if not 0 < c_lo < c_hi:
            raise serializers.ValidationError("bracket must satisfy 0 < c_lo < c_hi")
        return tuple(value)


class ScenarioSerializer(serializers.Serializer):
    """Validates a scenario file and builds the normalized nominal model."""
    model = StateSpaceSerializer()
    c = ToleranceField()
    T = serializers.IntegerField(min_value=1, required=False)
    rho_grid = serializers.IntegerField(min_value=1, required=False)
    mc = MonteCarloSerializer(required=False)
    c_max = CMaxOptionsSerializer(required=False)
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), required=False)
    outputs = serializers.CharField(required=False, allow_blank=False)

    def validate(self, data):
        try:
            model = normalize(StateSpaceModel(**data['model']))
            validate(model)
        except InputError as exc:
            raise serializers.ValidationError({'model': [str(exc)]})
        data['state_space'] = model

        data.setdefault('T', robustkf_setting('COMPARE_HORIZON'))
        data.setdefault('rho_grid', robustkf_setting('RHO_GRID'))
        mc = data.get('mc')
        if mc is not None and 'seed' not in mc:
            seeds = data.get('seeds')
            if not seeds:
                raise serializers.ValidationError({'mc': ["seed is required when no seeds list is given"]})
            mc['seed'] = seeds[0]
        return data


class SteadyStateSerializer(serializers.Serializer):
    c = RealField()
    theta = RealField()
    P = MatrixField()
    V = MatrixField()
    G = MatrixField()
    spectral_radius = RealField(source='closed_loop_radius')
    riccati_residual = RealField(source='residual')
    iterations = serializers.IntegerField()


class CMaxSerializer(serializers.Serializer):
    c_max = RealField()
    upper = RealField()
    saturated = serializers.BooleanField()
    bracket = VectorField()
    probes = serializers.IntegerField()
    criterion = serializers.CharField()
    method = serializers.CharField()


class CertificateSerializer(serializers.Serializer):
    rho = RealField()
    margin = RealField()
    holds = serializers.BooleanField()
    theta = RealField()
    rho_upper = RealField()
    SigmaRho = MatrixField()


class LeastFavorableModelSerializer(serializers.Serializer):
    theta = RealField()
    stationary = serializers.BooleanField()
    Atil = MatrixField()
    Btil = MatrixField()
    Ctil = MatrixField()
    Dtil = MatrixField()
    H = MatrixField()
    Ktil = MatrixField()
    L = MatrixField()
    OmegaInvLimit = MatrixField()


class StabilizingSerializer(serializers.Serializer):
    eigenvalues = EigenvalueField()
    spectral_radius = RealField(source='radius')
    stable = serializers.BooleanField()
    J = MatrixField()
    M = MatrixField()


class GapSerializer(serializers.Serializer):
    c = RealField()
    theta = RealField()
    gap_db = VectorField()
    kalman_db = VectorField(source='kalman.component_variances_db')
    robust_db = VectorField(source='robust.component_variances_db')
    kalman_variances = VectorField(source='kalman.component_variances')
    robust_variances = VectorField(source='robust.component_variances')
