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

from fk_particles_common.constants import (
    EXIT_OK,
    EXIT_CONFIG,
    RUN_RECORD_COLUMNS,
)
from . import run_cli

CIR = ['--model', 'cir', '--theta', 10, '--mu', 1, '--sigma', 0.1,
       '--delta', 0.01]


def simulate(capsys, *argv):
    code = run_cli('simulate', *argv)
    captured = capsys.readouterr()
    return code, list(csv.DictReader(io.StringIO(captured.out))), \
        captured.err


def test_gaussian_record(capsys):
    code, rows, err = simulate(capsys, '--model', 'gaussian-rw', '--x0', 1,
                               '--n', 4, '--N', 50, '--seed', 3)

    assert code == EXIT_OK
    assert list(rows[0].keys()) == RUN_RECORD_COLUMNS
    assert [row['k'] for row in rows] == ['0', '1', '2', '3']
    # every particle starts at x0 = 1, where U = -1
    assert float(rows[0]['log_mean_weight']) == -1.0
    total = math.fsum(float(row['log_mean_weight']) for row in rows)
    assert abs(float(rows[-1]['log_gamma_cum']) - total) < 1e-12
    assert 'log gamma^N_4(1)' in err


def test_replicates_differ(capsys):
    argv = ['--model', 'gaussian-rw', '--n', 3, '--N', 20, '--seed', 3]
    _, first, _ = simulate(capsys, *argv)
    _, again, _ = simulate(capsys, *argv)
    _, other, _ = simulate(capsys, *(argv + ['--replicate', 1]))

    assert first == again
    assert first != other


def test_flat_fixture(capsys):
    code, rows, _ = simulate(capsys, '--fixture', 'flat', '--x0', 1,
                             '--n', 5, '--N', 10)

    assert code == EXIT_OK
    assert all(float(row['log_mean_weight']) == 0.0 for row in rows)


def test_zero_horizon(capsys):
    code, rows, _ = simulate(capsys, '--model', 'gaussian-rw', '--n', 0,
                             '--N', 10)

    assert code == EXIT_OK
    assert rows == []


def test_cir_geometric_mean(capsys):
    code, rows, err = simulate(capsys, *(CIR + ['--alpha', 0.1, '--x0', 1,
                                                '--n', 10, '--N', 20]))

    assert code == EXIT_OK
    assert len(rows) == 10
    assert 'alpha = 1/n' in err


def test_cir_needs_positive_start(capsys):
    code, _, _ = simulate(capsys, *(CIR + ['--alpha', 0.1, '--x0', 0,
                                           '--n', 10, '--N', 20]))

    assert code == EXIT_CONFIG
