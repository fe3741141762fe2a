import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from ..exceptions import ScenarioInvalid
from ..least_favorable import certificate_for
from ..serializers import CertificateSerializer, MatrixField, ScenarioSerializer
from ..service import Scenario
from .factories import scenario_data


SCALAR_MODEL = {'A': 0.5, 'B': [1.0, 0.0], 'C': 1.0, 'D': [0.0, 1.0]}


class ScenarioSerializerTests(SimpleTestCase):
    def test_scalar_and_row_promotion(self):
        serializer = ScenarioSerializer(data=scenario_data(model=SCALAR_MODEL))
        self.assertTrue(serializer.is_valid(), serializer.errors)
        model = serializer.validated_data['state_space']
        self.assertEqual(model.A.shape, (1, 1))
        self.assertEqual(model.B.shape, (1, 2))
        assert_array_equal(model.P0, np.eye(1))

    def test_defaults(self):
        data = scenario_data()
        del data['T'], data['rho_grid']
        serializer = ScenarioSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['T'], 2000)
        self.assertEqual(serializer.validated_data['rho_grid'], 512)

    def test_auto_tolerance(self):
        serializer = ScenarioSerializer(data=scenario_data(c='auto'))
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['c'], 'auto')

    def test_rejects_bad_tolerance(self):
        for c in (0, -1.0, True, 'big'):
            serializer = ScenarioSerializer(data=scenario_data(c=c))
            self.assertFalse(serializer.is_valid())
            self.assertIn('c', serializer.errors)

    def test_monte_carlo_seed_from_seeds(self):
        serializer = ScenarioSerializer(data=scenario_data(mc={'N': 100, 'T': 5}, seeds=[11, 12]))
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['mc']['seed'], 11)

    def test_monte_carlo_needs_a_seed(self):
        serializer = ScenarioSerializer(data=scenario_data(mc={'N': 100, 'T': 5}))
        self.assertFalse(serializer.is_valid())
        self.assertIn('mc', serializer.errors)

    def test_unreachable_model(self):
        model = {'A': [[1.0, 0.0], [0.0, 1.0]], 'B': [[1.0], [0.0]], 'C': [[1.0, 0.0]], 'D': [[1.0]]}
        serializer = ScenarioSerializer(data=scenario_data(model=model))
        self.assertFalse(serializer.is_valid())
        self.assertIn('model', serializer.errors)

    def test_bracket_order(self):
        serializer = ScenarioSerializer(data=scenario_data(c='auto', c_max={'bracket': [1.0, 0.1]}))
        self.assertFalse(serializer.is_valid())
        self.assertIn('c_max', serializer.errors)


class MatrixFieldTests(SimpleTestCase):
    def test_ragged_rejected(self):
        serializer = ScenarioSerializer(data=scenario_data(model={**SCALAR_MODEL, 'A': [[1.0, 2.0], [3.0]]}))
        self.assertFalse(serializer.is_valid())

    def test_non_finite_representation(self):
        self.assertEqual(MatrixField().to_representation([[1.0, math.inf]]), [[1.0, None]])

    def test_certificate_without_risk(self):
        data = CertificateSerializer(certificate_for(np.array([[0.5]]), np.array([[1.0]]), 0.0)).data
        self.assertIsNone(data['margin'])
        self.assertIsNone(data['rho'])
        self.assertTrue(data['holds'])


class ScenarioTests(SimpleTestCase):
    def test_equality_follows_content(self):
        first = Scenario.from_data(scenario_data())
        second = Scenario.from_data(scenario_data())
        self.assertEqual(first, second)
        self.assertEqual(hash(first), hash(second))
        self.assertNotEqual(first, Scenario.from_data(scenario_data(c=0.2)))

    def test_invalid_data(self):
        with self.assertRaises(ScenarioInvalid):
            Scenario.from_data(scenario_data(c=None))

    def test_missing_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ScenarioInvalid):
                Scenario.load(Path(tmp) / 'absent.json')

    def test_top_level_must_be_object(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'list.json'
            path.write_text('[1, 2]', encoding='utf-8')
            with self.assertRaises(ScenarioInvalid):
                Scenario.load(path)
