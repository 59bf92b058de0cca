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
import logging

import pytest
from mock import patch
from pyfakefs import fake_filesystem_unittest

from fk_particles_cli import (
    COMMANDS,
    HANDLER_MARK,
    main,
    get_logger,
    build_parser,
)
from fk_particles_common.__version__ import version
from fk_particles_common.constants import (
    EXIT_OK,
    EXIT_CONFIG,
    LOGGER_NAME,
)
from fk_particles_common.serialization import parse_key_values
from . import run_cli


@pytest.mark.parametrize('command', COMMANDS, ids=lambda c: c.NAME)
def test_help_lists_every_key(command, capsys):
    with pytest.raises(SystemExit) as e:
        run_cli(command.NAME, '--help')

    assert e.value.code == 0
    out = capsys.readouterr().out
    for flag in ['--config', '--debug', '--out', '--seed', '--threads']:
        assert flag in out
    for parameter in command.PARAMETERS:
        assert parameter.flag in out


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        run_cli('--version')

    assert e.value.code == 0
    assert version in capsys.readouterr().out


def test_unknown_command_is_a_config_error(capsys):
    with pytest.raises(SystemExit) as e:
        run_cli('plot')

    assert e.value.code == EXIT_CONFIG
    assert 'invalid choice' in capsys.readouterr().err


def test_unknown_flag_is_a_config_error():
    with pytest.raises(SystemExit) as e:
        run_cli('exact', '--fixture', 'flat', '--n', 2, '--N', 2,
                '--particles', 3)

    assert e.value.code == EXIT_CONFIG


def test_bad_value_names_the_key(capsys):
    code = run_cli('exact', '--fixture', 'flat', '--n', 2, '--N', 0)

    assert code == EXIT_CONFIG
    assert 'Invalid configuration key "N"' in capsys.readouterr().err


def test_missing_required_key(capsys):
    code = run_cli('exact', '--fixture', 'flat', '--N', 2)

    assert code == EXIT_CONFIG
    assert '"n": a value is required' in capsys.readouterr().err


def test_missing_model(capsys):
    code = run_cli('exact', '--n', 2, '--N', 2)

    assert code == EXIT_CONFIG
    assert 'model' in capsys.readouterr().err


def test_fixture_and_model_file_conflict(capsys):
    code = run_cli('exact', '--fixture', 'flat', '--model-file', 'q.csv',
                   '--n', 2, '--N', 2)

    assert code == EXIT_CONFIG
    assert 'fixture' in capsys.readouterr().err


def test_model_file_missing(capsys):
    code = run_cli('exact', '--model-file', '/does/not/exist.csv',
                   '--n', 2, '--N', 2)

    assert code == EXIT_CONFIG
    assert 'model_file' in capsys.readouterr().err


def test_unwritable_out(capsys):
    code = run_cli('exact', '--fixture', 'flat', '--n', 2, '--N', 2,
                   '--out', '/does/not/exist/result.txt')

    assert code == EXIT_CONFIG
    assert 'out' in capsys.readouterr().err


def test_out_file(tmp_path, capsys):
    target = tmp_path / 'exact.txt'
    code = run_cli('exact', '--fixture', 'flat', '--n', 2, '--N', 2,
                   '--out', target)

    assert code == EXIT_OK
    assert capsys.readouterr().out == ''
    assert parse_key_values(target.read_text())['coalescent'] == '0.0'


def test_get_logger_replaces_its_handler():
    get_logger(False)
    get_logger(True)

    base = logging.getLogger(LOGGER_NAME)
    marked = [handler for handler in base.handlers
              if getattr(handler, HANDLER_MARK, False)]
    assert len(marked) == 1
    assert base.level == logging.DEBUG
    get_logger(False)
    assert base.level == logging.INFO


def test_debug_flag_logs_config(capsys):
    code = run_cli('exact', '--fixture', 'flat', '--n', 2, '--N', 2,
                   '--debug')

    assert code == EXIT_OK
    assert 'Running exact with' in capsys.readouterr().err


def test_boolean_flag_without_value():
    args = build_parser().parse_args(['variance', '--check-unbiased'])

    assert args.check_unbiased == 'true'


class ConfigFileTests(fake_filesystem_unittest.TestCase):

    def setUp(self):
        super(ConfigFileTests, self).setUp()
        self.setUpPyfakefs()

    def run_exact(self, *argv):
        stream = io.StringIO()
        with patch('sys.stdout', stream), \
                patch('sys.stderr', io.StringIO()):
            code = main(['exact'] + [str(arg) for arg in argv])
        return code, parse_key_values(stream.getvalue())

    def test_keys_from_file(self):
        self.fs.create_file('/work/q.csv', contents='2,1\n1,1\n')
        self.fs.create_file('/work/run.cfg',
                            contents='# exact run\nmodel_file=/work/q.csv\n'
                                     'n=2\nN=2\n')

        code, report = self.run_exact('--config', '/work/run.cfg')

        self.assertEqual(EXIT_OK, code)
        self.assertEqual('2', report['N'])
        self.assertEqual('q', report['model'])

    def test_flags_override_file(self):
        self.fs.create_file('/work/q.csv', contents='2,1\n1,1\n')
        self.fs.create_file('/work/run.yaml',
                            contents='model-file: /work/q.csv\nn: 2\nN: 2\n')

        code, report = self.run_exact('--config', '/work/run.yaml',
                                      '--N', 3)

        self.assertEqual(EXIT_OK, code)
        self.assertEqual('3', report['N'])

    def test_unknown_file_key(self):
        self.fs.create_file('/work/run.cfg',
                            contents='model_file=/work/q.csv\nparticles=2\n')

        code, _ = self.run_exact('--config', '/work/run.cfg', '--n', 2,
                                 '--N', 2)

        self.assertEqual(EXIT_CONFIG, code)

    def test_missing_explicit_file(self):
        code, _ = self.run_exact('--config', '/work/absent.cfg', '--n', 2,
                                 '--N', 2)

        self.assertEqual(EXIT_CONFIG, code)
