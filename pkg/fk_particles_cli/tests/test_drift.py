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

import math

from fk_particles_common.constants import (
    EXIT_OK,
    EXIT_CONFIG,
    EXIT_CHECK_FAILED,
)
from fk_particles_common.serialization import parse_key_values
from . import run_cli

CIR = ['--model', 'cir', '--theta', 10, '--mu', 1, '--sigma', 0.1,
       '--delta', 0.01, '--alpha', 0.01]


def drift_report(capsys, *argv):
    code = run_cli('drift', *argv)
    return code, parse_key_values(capsys.readouterr().out)


def test_gaussian_walk_quarter_square(capsys):
    code, report = drift_report(capsys, '--model', 'gaussian-rw',
                                '--drift-delta', 0.5, '--d', 2)

    assert code == EXIT_OK
    assert report['holds'] == 'true'
    assert report['check_points'] == '2001'
    assert float(report['u_plus_v_norm']) == 0.0
    # log Q(e^V)(0) - V(0) / 2 = 1 + log(2) / 2 - 1 / 2
    assert abs(float(report['b_empirical']) -
               (0.5 + 0.5 * math.log(2))) < 1e-12


def test_gaussian_walk_second_order(capsys):
    code, report = drift_report(capsys, '--model', 'gaussian-rw',
                                '--drift-delta', 0.5, '--d', 3,
                                '--epsilon', 0.2, '--epsilon0', 0.1)

    assert code == EXIT_OK
    assert report['second_order_holds'] == 'true'
    # log Q(e^{1.2 V})(0) - 0.1 V(0)
    assert abs(float(report['b_star']) -
               (1.1 - 0.5 * math.log(0.4))) < 1e-12


def test_gaussian_walk_divergent(capsys):
    code = run_cli('drift', '--model', 'gaussian-rw', '--v-a', 1,
                   '--drift-delta', 0.5, '--d', 2)

    assert code == EXIT_CHECK_FAILED
    assert 'infinite' in capsys.readouterr().err


def test_gaussian_walk_default_level(capsys):
    code, report = drift_report(capsys, '--model', 'gaussian-rw',
                                '--drift-delta', 0.5)

    assert code == EXIT_OK
    assert report['holds'] == 'true'
    # drift fails exactly where x^2 < (1 - log(0.5)) / 1.25, V < 1.33863
    assert 1.33 < float(report['d']) <= 1.33864


def test_ar_default_level(capsys):
    code, report = drift_report(capsys, '--model', 'ar', '--alpha', 0.4,
                                '--drift-delta', 0.5)

    assert code == EXIT_OK
    assert report['holds'] == 'true'
    # -0.045 x^2 + |x| + 0.8466 <= 0 for |x| >= 23.039, V >= 133.70
    assert 133.0 < float(report['d']) <= 133.71


def test_delta_range(capsys):
    code = run_cli('drift', '--model', 'gaussian-rw', '--drift-delta', 1.5,
                   '--d', 2)

    assert code == EXIT_CONFIG


def test_cir_lemma(capsys):
    code, report = drift_report(capsys, *(CIR + ['--s', 0.02,
                                                 '--drift-delta', 0.01]))

    assert code == EXIT_OK
    assert report['holds'] == 'true'
    assert abs(float(report['d_lower']) - 1741.3) < 0.1
    assert float(report['d']) == float(report['d_lower'])
    assert float(report['b_bar_d']) >= float(report['b_d'])
    assert float(report['identity_error']) <= 1e-12


def test_cir_needs_s(capsys):
    code = run_cli('drift', *(CIR + ['--drift-delta', 0.01]))

    assert code == EXIT_CONFIG


def test_cir_delta_too_large(capsys):
    code = run_cli('drift', *(CIR + ['--s', 0.02, '--drift-delta', 0.5]))

    assert code == EXIT_CONFIG


def test_two_state_fixture(capsys):
    code, report = drift_report(capsys, '--fixture', 'two-state',
                                '--drift-delta', 0.5, '--d', 1)

    assert code == EXIT_OK
    assert report['holds'] == 'true'
    assert report['iterated_holds'] == 'true'
    assert float(report['rho']) == 0.0
    assert abs(float(report['b_empirical']) - math.log(3)) < 1e-12


def test_finite_v_values(capsys):
    code, report = drift_report(capsys, '--fixture', 'two-state',
                                '--drift-delta', 0.5, '--d', 3,
                                '--v-values', '1,3')

    assert code == EXIT_OK
    assert report['check_points'] == '2'


def test_finite_v_values_length(capsys):
    code = run_cli('drift', '--fixture', 'two-state', '--drift-delta', 0.5,
                   '--d', 1, '--v-values', '1,2,3')

    assert code == EXIT_CONFIG


def test_identity_fixture(capsys):
    code = run_cli('drift', '--fixture', 'identity', '--drift-delta', 0.5,
                   '--d', 1)

    assert code == EXIT_CHECK_FAILED
