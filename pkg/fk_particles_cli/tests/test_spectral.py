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

import io
import csv
import math

import numpy

from fk_particles_common.constants import (
    EXIT_OK,
    EXIT_CONFIG,
    EXIT_CHECK_FAILED,
)
from fk_particles_common.serialization import read_spectral_triple
from . import run_cli

GOLDEN = (3 + math.sqrt(5)) / 2


def spectral_output(capsys, *argv):
    code = run_cli('spectral', *argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_two_state_fixture(capsys):
    code, out, err = spectral_output(capsys, '--fixture', 'two-state')

    assert code == EXIT_OK
    assert out.startswith('# lambda = 2.618033988')
    labels, triple = read_spectral_triple(io.StringIO(out))
    assert labels == ['0', '1']
    assert abs(triple.eigenvalue - GOLDEN) < 1e-9
    assert abs(triple.mu0.sum() - 1) < 1e-12
    assert abs(triple.mu0.dot(triple.h0) - 1) < 1e-12
    assert 'MET fit at state 0' in err


def test_threshold_column(capsys):
    _, out, _ = spectral_output(capsys, '--fixture', 'two-state',
                                '--c1', 3)

    rows = list(csv.DictReader(io.StringIO(out.split('\n', 1)[1])))
    assert [name for name in rows[0]] == ['state', 'h0', 'mu0',
                                          'phi_threshold']
    for row in rows:
        threshold = int(row['phi_threshold'])
        assert threshold >= 3
        assert threshold % 3 == 0


def test_identity_fixture_is_ambiguous(capsys):
    code, out, err = spectral_output(capsys, '--fixture', 'identity')

    assert code == EXIT_CHECK_FAILED
    assert out == ''
    assert 'not primitive' in err


def test_minorization_report(capsys):
    code, _, err = spectral_output(capsys, '--fixture', 'two-state',
                                   '--m0', 1)

    assert code == EXIT_OK
    assert 'Minorization with m0=1: epsilon = 2' in err


def test_met_state_out_of_range(capsys):
    code, _, _ = spectral_output(capsys, '--fixture', 'flat',
                                 '--met-state', 2)

    assert code == EXIT_CONFIG


def test_continuous_model_needs_grid(capsys):
    code, _, err = spectral_output(capsys, '--model', 'gaussian-rw')

    assert code == EXIT_CONFIG
    assert '"lower"' in err


def test_discretized_gaussian_walk(capsys):
    code, out, _ = spectral_output(capsys, '--model', 'gaussian-rw',
                                   '--lower', -10, '--upper', 10,
                                   '--points', 401, '--met-state', 200)

    assert code == EXIT_OK
    labels, triple = read_spectral_triple(io.StringIO(out))
    assert len(labels) == 401
    assert 0 < triple.eigenvalue < 1
    assert numpy.all(triple.h0 > 0)
    peak = int(numpy.argmax(triple.h0))
    assert abs(float(labels[peak])) < 1e-9
    assert numpy.all(numpy.diff(triple.h0[:peak + 1]) > 0)
    assert numpy.all(numpy.diff(triple.h0[peak:]) < 0)
