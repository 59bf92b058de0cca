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

# Stdlib imports
import os
import sys
import logging
import argparse

# Third party imports

# This package imports
from fk_particles_common.config import Config, resolve, to_bool
from fk_particles_common.__version__ import version
from fk_particles_common.constants import (
    EXIT_CONFIG,
    LOGGER_NAME,
)
from fk_particles_common.exceptions import (
    ConfigurationError,
    NonRecoverableError,
)
from fk_particles_common.utils import logger, prepare_for_log
from . import drift, exact, simulate, spectral, variance
from .parameters import with_fixture

COMMANDS = [variance, exact, spectral, drift, simulate]
WARNINGS_LOGGER = 'py.warnings'
HANDLER_MARK = '_fk_particles_cli'


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors are configuration errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, '{prog}: error: {message}\n'.format(
            prog=self.prog, message=message))


def get_logger(debug):
    base = logger()
    if debug:
        base.setLevel(logging.DEBUG)
    else:
        base.setLevel(logging.INFO)
    logging.captureWarnings(True)

    output_handler = logging.StreamHandler(sys.stderr)
    # We'll handle the actual logging level in the logger itself
    output_handler.setLevel(logging.DEBUG)
    formatter = logging.Formatter('%(message)s')
    output_handler.setFormatter(formatter)
    setattr(output_handler, HANDLER_MARK, True)
    for name in (LOGGER_NAME, WARNINGS_LOGGER):
        target = logging.getLogger(name)
        for handler in list(target.handlers):
            if getattr(handler, HANDLER_MARK, False):
                target.removeHandler(handler)
        target.addHandler(output_handler)
    return base


def _describe(parameter):
    parts = [parameter.help]
    if parameter.required:
        parts.append('(required)')
    elif parameter.default is not None:
        parts.append('(default: {0})'.format(parameter.default))
    return ' '.join(part for part in parts if part)


def build_parser():
    parser = ArgumentParser(
        prog='fk-particles',
        description='Particle approximations of Feynman-Kac formulae: '
                    'variance experiments, exact oracles, spectral and '
                    'drift audits.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {0}'.format(version))
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    for command in COMMANDS:
        sub = subparsers.add_parser(command.NAME, help=command.HELP,
                                    description=command.HELP)
        sub.add_argument('--config', metavar='PATH',
                         help='key=value or YAML file with default values '
                              'for the keys below')
        sub.add_argument('--debug', action='store_true',
                         help='log per-step diagnostics')
        sub.add_argument('--out', metavar='PATH',
                         help='write the result here instead of standard '
                              'output')
        for parameter in command.PARAMETERS:
            kwargs = {'dest': parameter.name,
                      'default': None,
                      'help': _describe(parameter)}
            if parameter.parser is to_bool:
                kwargs.update(nargs='?', const='true')
            sub.add_argument(parameter.flag, **kwargs)
        sub.set_defaults(command_module=command)
    return parser


def resolve_config(command, args):
    file_values = Config(args.config).get()
    flag_values = dict((parameter.name, getattr(args, parameter.name))
                       for parameter in command.PARAMETERS)
    return with_fixture(resolve(command.PARAMETERS, file_values,
                                flag_values))


def _open_output(path):
    try:
        return open(os.path.expanduser(path), 'w')
    except IOError as e:
        raise ConfigurationError(
            'out', 'unable to write {path} ({error})'.format(
                path=path, error=e))


def main(argv=None):
    args = build_parser().parse_args(argv)
    get_logger(args.debug)
    command = args.command_module
    try:
        config = resolve_config(command, args)
        logger('cli').debug(
            'Running {name} with {config}.'.format(
                name=command.NAME, config=prepare_for_log(config)))
        if args.out:
            with _open_output(args.out) as stream:
                return command.run(config, stream=stream)
        return command.run(config, stream=sys.stdout)
    except NonRecoverableError as e:
        logger('cli').error(str(e))
        return e.exit_code
