# Copyright (c) 2026 fk-particles contributors. All rights reserved
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import unittest
import warnings

import numpy
import pytest
from scipy import sparse

from ..core import (
    FKModel,
    FiniteModel,
    LogPotential,
    MarkovKernel,
    q_apply,
    discretize,
    iterate_log,
    make_grid,
    grid_gamma_oracle,
    gamma_exact_finite,
    quadrature_weights,
    log_gamma_exact_finite,
)
from ..models import ar_model, gaussian_rw_model
from ..constants import STATE_SPACE_REAL_LINE
from ..exceptions import Unsupported, InvalidArgument, TruncationWarning

TWO_STATE = [[2.0, 1.0], [1.0, 1.0]]
# dyadic entries keep every partial sum exact
FLAT = [[0.5, 0.5], [0.25, 0.75]]
DECIMAL_FLAT = [[0.1, 0.2, 0.7], [0.3, 0.3, 0.4], [0.6, 0.3, 0.1]]


class FiniteModelTest(unittest.TestCase):

    def test_rejects_negative_entries(self):
        with self.assertRaises(InvalidArgument):
            FiniteModel([[1.0, -0.5], [1.0, 1.0]])

    def test_rejects_zero_row(self):
        with self.assertRaises(InvalidArgument):
            FiniteModel([[1.0, 1.0], [0.0, 0.0]])

    def test_zero_row_allowed_when_not_strict(self):
        model = FiniteModel(numpy.zeros((2, 2)), strict=False)
        self.assertEqual(2, model.size)

    def test_rejects_non_square(self):
        with self.assertRaises(InvalidArgument):
            FiniteModel([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])

    def test_rejects_label_mismatch(self):
        with self.assertRaises(InvalidArgument):
            FiniteModel(TWO_STATE, labels=['a'])

    def test_rejects_small_v_weights(self):
        with self.assertRaises(InvalidArgument):
            FiniteModel(TWO_STATE, v_weights=[1.0, 0.5])

    def test_is_read_only(self):
        model = FiniteModel(TWO_STATE)
        with self.assertRaises(ValueError):
            model.q_matrix[0, 0] = 5.0

    def test_row_mass_and_potential(self):
        model = FiniteModel(TWO_STATE, labels=['a', 'b'])
        numpy.testing.assert_array_equal([3.0, 2.0], model.row_mass)
        numpy.testing.assert_allclose(numpy.log([3.0, 2.0]),
                                      model.log_potential)
        numpy.testing.assert_array_equal([1.0, 1.0], model.v)

    def test_from_potential(self):
        model = FiniteModel.from_potential(FLAT, [0.0, numpy.log(2.0)])
        numpy.testing.assert_allclose([[0.5, 0.5], [0.5, 1.5]],
                                      model.q_matrix)

    def test_to_fk_model(self):
        fk = FiniteModel(TWO_STATE).to_fk_model()

        numpy.testing.assert_allclose([1.0, 1.0],
                                      fk.kernel.transition.sum(axis=1))
        numpy.testing.assert_allclose(numpy.log([3.0, 2.0]),
                                      fk.potential([0, 1]))

    def test_sparse_input(self):
        model = FiniteModel(sparse.csr_matrix(numpy.array(TWO_STATE)))
        self.assertTrue(model.is_sparse)
        numpy.testing.assert_array_equal(TWO_STATE, model.dense())


class QApplyTest(unittest.TestCase):

    def test_two_state(self):
        numpy.testing.assert_array_equal(
            [3.0, 2.0], q_apply(FiniteModel(TWO_STATE), [1.0, 1.0]))

    def test_identity(self):
        numpy.testing.assert_array_equal(
            [5.0, 7.0], q_apply(numpy.eye(2), [5.0, 7.0]))

    def test_stochastic(self):
        numpy.testing.assert_array_equal(
            [0.5, 0.5], q_apply([[0.5, 0.5], [0.5, 0.5]], [1.0, 0.0]))

    def test_dimension_mismatch(self):
        with self.assertRaises(InvalidArgument):
            q_apply(FiniteModel(TWO_STATE), [1.0, 1.0, 1.0])

    def test_linear(self):
        model = FiniteModel([[0.2, 1.3, 0.0], [0.7, 0.1, 2.0],
                             [1.1, 0.4, 0.9]])
        f = numpy.array([1.0, -2.0, 0.5])
        g = numpy.array([0.3, 4.0, -1.0])
        numpy.testing.assert_allclose(
            q_apply(model, 2.0 * f - 3.0 * g),
            2.0 * q_apply(model, f) - 3.0 * q_apply(model, g))


class GammaExactTest(unittest.TestCase):

    def test_horizon_zero_is_phi(self):
        self.assertEqual(3.0, gamma_exact_finite(FiniteModel(TWO_STATE), 1,
                                                 0, [7.0, 3.0]))

    def test_matches_matrix_power(self):
        q = numpy.array(TWO_STATE)
        for n in range(6):
            expected = numpy.linalg.matrix_power(q, n).dot([1.0, 1.0])
            for x in range(2):
                self.assertAlmostEqual(
                    1.0, gamma_exact_finite(q, x, n, [1.0, 1.0]) /
                    expected[x], places=13)

    def test_two_state_horizon_two(self):
        self.assertAlmostEqual(
            8.0, gamma_exact_finite(FiniteModel(TWO_STATE), 0, 2,
                                    [1.0, 1.0]), places=12)

    def test_flat_chain_is_exact(self):
        model = FiniteModel(FLAT)
        for n in range(101):
            for x in range(2):
                self.assertEqual(1.0, gamma_exact_finite(model, x, n,
                                                         [1.0, 1.0]))

    def test_decimal_flat_chain_is_exact(self):
        model = FiniteModel(DECIMAL_FLAT)
        numpy.testing.assert_array_equal([1.0, 1.0, 1.0], model.row_mass)
        self.assertTrue(model.has_constant_potential)
        for n in range(51):
            for x in range(3):
                self.assertEqual(1.0, gamma_exact_finite(model, x, n,
                                                         [1.0, 1.0, 1.0]))
        signs, logs = iterate_log(model, 50, [2.0, 2.0, 2.0])
        numpy.testing.assert_array_equal([1.0, 1.0, 1.0], signs)
        numpy.testing.assert_array_equal([numpy.log(2.0)] * 3, logs)

    def test_small_integer_matrix_is_exact(self):
        self.assertEqual(8.0, gamma_exact_finite(FiniteModel(TWO_STATE), 0,
                                                 2, [1.0, 1.0]))
        self.assertEqual(13.0, gamma_exact_finite(FiniteModel(TWO_STATE), 0,
                                                  2, [2.0, 1.0]))

    def test_underflow_falls_back_to_log_space(self):
        model = FiniteModel([[1e-3]])
        sign, log_value = log_gamma_exact_finite(model, 0, 200, [1.0])
        self.assertEqual(1.0, sign)
        self.assertAlmostEqual(200 * numpy.log(1e-3), log_value, places=9)
        with self.assertRaises(InvalidArgument):
            gamma_exact_finite(model, 0, 200, [1.0])

    def test_signed_phi(self):
        q = numpy.array(TWO_STATE)
        phi = numpy.array([1.0, -1.0])
        self.assertEqual(0.0, gamma_exact_finite(q, 1, 1, phi))
        for n in range(1, 5):
            expected = numpy.linalg.matrix_power(q, n).dot(phi)[0]
            self.assertAlmostEqual(expected,
                                   gamma_exact_finite(q, 0, n, phi),
                                   places=9)

    def test_log_space_beyond_double_range(self):
        model = FiniteModel([[1000.0]])
        sign, log_value = log_gamma_exact_finite(model, 0, 200, [1.0])

        self.assertEqual(1.0, sign)
        self.assertAlmostEqual(200 * numpy.log(1000.0), log_value, places=9)
        with self.assertRaises(InvalidArgument):
            gamma_exact_finite(model, 0, 200, [1.0])

    def test_semigroup(self):
        model = FiniteModel([[0.2, 1.3, 0.0], [0.7, 0.1, 2.0],
                             [1.1, 0.4, 0.9]])
        phi = numpy.array([1.0, 2.0, 0.5])
        _, direct = iterate_log(model, 7, phi)
        signs, logs = iterate_log(model, 3, phi)
        _, composed = iterate_log(model, 4, signs * numpy.exp(logs))
        numpy.testing.assert_allclose(direct, composed, rtol=1e-12,
                                   atol=1e-12)

    def test_sparse_matches_dense(self):
        q = numpy.array([[0.2, 1.3, 0.0], [0.7, 0.0, 2.0], [0.0, 0.4, 0.9]])
        dense = iterate_log(FiniteModel(q), 9, numpy.ones(3))[1]
        banded = iterate_log(FiniteModel(sparse.csr_matrix(q)), 9,
                             numpy.ones(3))[1]
        numpy.testing.assert_allclose(dense, banded, rtol=1e-13)

    def test_bad_index(self):
        with self.assertRaises(InvalidArgument):
            gamma_exact_finite(FiniteModel(TWO_STATE), 2, 1, [1.0, 1.0])

    def test_negative_horizon(self):
        with self.assertRaises(InvalidArgument):
            gamma_exact_finite(FiniteModel(TWO_STATE), 0, -1, [1.0, 1.0])


def test_trapezoid_weights():
    grid = numpy.linspace(0.0, 1.0, 5)
    weights = quadrature_weights(grid)
    numpy.testing.assert_allclose([0.125, 0.25, 0.25, 0.25, 0.125], weights)


def test_simpson_weights_integrate_cubic():
    grid = numpy.linspace(0.0, 2.0, 7)
    weights = quadrature_weights(grid, 'simpson')
    assert weights.dot(grid ** 3) == pytest.approx(4.0, rel=1e-12)


def test_simpson_needs_odd_points():
    with pytest.raises(InvalidArgument):
        quadrature_weights(numpy.linspace(0.0, 1.0, 4), 'simpson')


def test_unknown_rule():
    with pytest.raises(InvalidArgument):
        quadrature_weights(numpy.linspace(0.0, 1.0, 4), 'gauss')


def test_grid_needs_two_points():
    with pytest.raises(InvalidArgument):
        make_grid(gaussian_rw_model(), -1.0, 1.0, 1)


def test_grid_needs_ordered_bounds():
    with pytest.raises(InvalidArgument):
        make_grid(gaussian_rw_model(), 1.0, -1.0, 11)


class DiscretizeTest(unittest.TestCase):

    def test_gaussian_rw_row_mass(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            finite = discretize(gaussian_rw_model(), -10.0, 10.0, 2001)
        grid = finite.metadata['grid']
        inner = numpy.abs(grid) <= 5.0
        numpy.testing.assert_allclose(
            1.0, finite.metadata['row_mass'][inner], atol=1e-4)
        # edge rows lose half of their kernel mass
        self.assertTrue(any(issubclass(w.category, TruncationWarning)
                            for w in caught))
        self.assertIn(10.0, finite.metadata['truncated_states'])
        self.assertNotIn(0.0, finite.metadata['truncated_states'])
        self.assertEqual(2001, finite.size)

    def test_truncation_warning(self):
        with pytest.warns(TruncationWarning):
            discretize(gaussian_rw_model(), -2.0, 2.0, 101)

    def test_ar_one_step(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', TruncationWarning)
            finite = discretize(ar_model(0.4), -12.0, 12.0, 2401)
        grid = finite.metadata['grid']
        origin = int(numpy.argmin(numpy.abs(grid)))
        self.assertAlmostEqual(
            1.0, gamma_exact_finite(finite, origin, 1, numpy.ones(2401)),
            places=4)

    def test_band_matches_dense(self):
        model = gaussian_rw_model()
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', TruncationWarning)
            dense = discretize(model, -10.0, 10.0, 401)
            banded = discretize(model, -10.0, 10.0, 401, band=12.0)
        self.assertTrue(banded.is_sparse)
        ones = numpy.ones(401)
        numpy.testing.assert_allclose(iterate_log(dense, 10, ones)[1],
                                      iterate_log(banded, 10, ones)[1],
                                      rtol=1e-10, atol=1e-10)

    def test_needs_density(self):
        class Jump(MarkovKernel):
            def sample(self, states, generator):
                return states

        model = FKModel(Jump(), LogPotential(lambda x: 0 * x),
                        STATE_SPACE_REAL_LINE)
        with self.assertRaises(Unsupported):
            discretize(model, -1.0, 1.0, 11)


class GridOracleTest(unittest.TestCase):

    def _oracle(self, points, x0_list, n_list):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', TruncationWarning)
            return grid_gamma_oracle(gaussian_rw_model(), x0_list, n_list,
                                     -10.0, 10.0, points)[0]

    def test_grid_refinement(self):
        x0_list = [-4.0, 0.0, 1.5, 4.0]
        n_list = [1, 2, 5, 20]
        coarse = self._oracle(501, x0_list, n_list)
        fine = self._oracle(1001, x0_list, n_list)
        for key, value in fine.items():
            self.assertAlmostEqual(0.0, coarse[key] - value, places=6)

    def test_off_grid_start_and_horizon_zero(self):
        oracle = self._oracle(501, [0.123], [0, 1])
        self.assertEqual(0.0, oracle[(0.123, 0)])
        self.assertAlmostEqual(-0.123 ** 2, oracle[(0.123, 1)], places=6)

    def test_negative_horizon(self):
        with self.assertRaises(InvalidArgument):
            self._oracle(101, [0.0], [-1])
