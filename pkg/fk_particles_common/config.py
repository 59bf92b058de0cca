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

# Third party imports
import yaml

# This package imports
from .constants import CONFIG_PATH_ENV, DEFAULT_CONFIG_PATH
from .exceptions import ConfigurationError
from .utils import logger

YAML_SUFFIXES = ('.yaml', '.yml')


def normalize_key(key):
    return key.strip().replace('-', '_')


def parse_flat_config(text):
    """Parse `key=value` lines; blank lines and `#` comment lines are
    skipped."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ConfigurationError(
                line, 'line {number} is not of the form key=value'.format(
                    number=number))
        key, value = line.split('=', 1)
        values[normalize_key(key)] = value.strip()
    return values


class Config(object):

    _path_options = [
        {'source': DEFAULT_CONFIG_PATH},
        {'env': True, 'source': CONFIG_PATH_ENV},
    ]

    def __init__(self, path=None):
        self.path = path

    def _find_config_file(self):
        if self.path:
            return os.path.expanduser(self.path)

        selected = None
        for path in self._path_options:
            source = path['source']
            if path.get('env'):
                source = os.getenv(source)
            if source:
                source = os.path.expanduser(source)
                if os.path.isfile(source):
                    selected = source
        return selected

    def get(self):
        config_path = self._find_config_file()
        if not config_path:
            return {}
        try:
            with open(config_path) as f:
                text = f.read()
        except IOError:
            if self.path:
                raise ConfigurationError(
                    'config', 'unable to read configuration file '
                    '{config_path}'.format(config_path=config_path))
            logger('config').warning(
                'Unable to read configuration file {config_path}.'.format(
                    config_path=config_path))
            return {}

        if config_path.endswith(YAML_SUFFIXES):
            cfg = yaml.safe_load(text) or {}
            if not isinstance(cfg, dict):
                raise ConfigurationError(
                    'config', 'YAML configuration must be a flat mapping')
            return dict((normalize_key(str(k)), v) for k, v in cfg.items())
        return parse_flat_config(text)


def to_int(raw):
    if isinstance(raw, bool):
        raise ValueError('booleans are not integers')
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float) and raw.is_integer():
        return int(raw)
    return int(str(raw).strip())


def to_float(raw):
    return float(str(raw).strip()) if not isinstance(raw, float) else raw


def to_bool(raw):
    if isinstance(raw, bool):
        return raw
    lowered = str(raw).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: {0}'.format(raw))


def list_of(parser):
    def parse(raw):
        if isinstance(raw, (list, tuple)):
            items = raw
        else:
            items = [item for item in str(raw).split(',') if item.strip()]
        if not items:
            raise ValueError('empty list')
        return [parser(item) for item in items]
    parse.__name__ = 'list_of_{0}'.format(parser.__name__)
    return parse


def choice(options):
    def parse(raw):
        value = str(raw).strip()
        if value not in options:
            raise ValueError('expected one of {0}'.format(', '.join(options)))
        return value
    parse.__name__ = 'choice'
    return parse


def _each(value):
    return value if isinstance(value, list) else [value]


def positive(value):
    if any(item <= 0 for item in _each(value)):
        return 'must be > 0'


def non_negative(value):
    if any(item < 0 for item in _each(value)):
        return 'must be >= 0'


def at_least(bound):
    def check(value):
        if any(item < bound for item in _each(value)):
            return 'must be >= {0}'.format(bound)
    return check


def open_interval(lower, upper):
    def check(value):
        if any(not lower < item < upper for item in _each(value)):
            return 'must lie in ({0}, {1})'.format(lower, upper)
    return check


class Parameter(object):
    """One accepted configuration key of a command."""

    def __init__(self, name, parser, default=None, check=None,
                 required=False, help=None):
        self.name = name
        self.parser = parser
        self.default = default
        self.check = check
        self.required = required
        self.help = help or ''

    @property
    def flag(self):
        return '--{0}'.format(self.name.replace('_', '-'))

    def parse(self, raw):
        try:
            value = self.parser(raw)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(
                self.name, 'cannot parse {raw!r} ({error})'.format(
                    raw=raw, error=e))
        if self.check is not None:
            problem = self.check(value)
            if problem:
                raise ConfigurationError(
                    self.name, '{value!r} {problem}'.format(
                        value=value, problem=problem))
        return value


def resolve(parameters, file_values=None, flag_values=None):
    """Merge file values and flags (flags win), reject unknown keys, parse
    and range-check every value.

    :param parameters: list of `Parameter` accepted by the command.
    :returns: dict of parsed values keyed by parameter name.
    """
    known = dict((p.name, p) for p in parameters)
    merged = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            key = normalize_key(key)
            if key not in known:
                raise ConfigurationError(key, 'unknown key')
            if value is not None:
                merged[key] = value

    resolved = {}
    for name, parameter in known.items():
        if name in merged:
            resolved[name] = parameter.parse(merged[name])
        elif parameter.required:
            raise ConfigurationError(name, 'a value is required')
        elif parameter.default is not None:
            resolved[name] = parameter.parse(parameter.default)
        else:
            resolved[name] = None
    return resolved
