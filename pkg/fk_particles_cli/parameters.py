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

# This package imports
from fk_particles_common.config import (
    choice,
    to_int,
    list_of,
    to_float,
    positive,
    Parameter,
    at_least,
    non_negative,
)
from fk_particles_common.constants import (
    MODEL_FINITE,
    QUADRATURE_RULES,
    CONTINUOUS_MODELS,
    QUADRATURE_TRAPEZOID,
)
from fk_particles_common.exceptions import ConfigurationError

FIXTURES_DIR = os.path.join(os.path.dirname(__file__), 'fixtures')
FIXTURES = ['two-state', 'flat', 'identity', 'weighted-two-state']


def fixture_path(name):
    return os.path.join(FIXTURES_DIR, '{name}.csv'.format(name=name))


COMMON_PARAMETERS = [
    Parameter('seed', to_int, default=0, check=non_negative,
              help='master seed of the replicate streams'),
    Parameter('threads', to_int, check=positive,
              help='worker threads (default: machine parallelism)'),
]

MODEL_PARAMETERS = [
    Parameter('model', choice(CONTINUOUS_MODELS + [MODEL_FINITE]),
              help='model id: {0}'.format(', '.join(CONTINUOUS_MODELS))),
    Parameter('model_file', str,
              help='CSV matrix of a finite model'),
    Parameter('fixture', choice(FIXTURES),
              help='shipped finite model: {0}'.format(', '.join(FIXTURES))),
    Parameter('alpha', to_float,
              help='AR coefficient, or the CIR potential exponent'),
    Parameter('theta', to_float, check=positive, help='CIR mean reversion'),
    Parameter('mu', to_float, check=positive, help='CIR long-run mean'),
    Parameter('sigma', to_float, check=positive, help='CIR volatility'),
    Parameter('delta', to_float, check=positive, help='CIR time step'),
]

GRID_BOUNDS = [
    Parameter('lower', to_float, help='lower grid bound'),
    Parameter('upper', to_float, help='upper grid bound'),
    Parameter('points', to_int, check=at_least(2), help='grid points'),
]

GRID_PARAMETERS = GRID_BOUNDS + [
    Parameter('rule', choice(QUADRATURE_RULES),
              default=QUADRATURE_TRAPEZOID, help='quadrature rule'),
    Parameter('band', to_float, check=positive,
              help='banded discretization width in conditional standard '
                   'deviations'),
]

HORIZONS = Parameter('n', list_of(to_int), required=True,
                     check=non_negative, help='comma separated horizons')
PARTICLES = Parameter('N', to_int, required=True, check=positive,
                      help='number of particles')


def with_fixture(config):
    """Turn a `fixture` name into the `model_file` it stands for."""
    name = config.get('fixture')
    if not name:
        return config
    if config.get('model_file'):
        raise ConfigurationError(
            'fixture', 'cannot be combined with model_file')
    config = dict(config)
    config['model_file'] = fixture_path(name)
    return config


def state_indices(model, values, key='x0'):
    """Validate finite-model starting states given as integral numbers."""
    indices = []
    for value in values:
        if float(value) != int(float(value)) or \
                not 0 <= int(float(value)) < model.size:
            raise ConfigurationError(
                key, '{value!r} is not a state index of a model with '
                '{size} states'.format(value=value, size=model.size))
        indices.append(int(float(value)))
    return indices
