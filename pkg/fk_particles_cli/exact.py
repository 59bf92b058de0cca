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

# Third party imports

# This package imports
from fk_particles_common import with_model
from fk_particles_common.core import FiniteModel
from fk_particles_common.config import (
    to_int,
    to_float,
    positive,
    Parameter,
    non_negative,
)
from fk_particles_common.variance import (
    brute_force_variance,
    coalescent_exact_variance,
)
from fk_particles_common.constants import EXIT_OK, EXIT_CHECK_FAILED
from fk_particles_common.exceptions import Unsupported
from fk_particles_common.serialization import format_value
from fk_particles_common.utils import op, logger
from .parameters import (
    PARTICLES,
    state_indices,
    MODEL_PARAMETERS,
    COMMON_PARAMETERS,
)

NAME = 'exact'
HELP = 'Exact relative variance of a finite model two ways: coalescent ' \
       'expansion and brute-force enumeration.'

PARAMETERS = COMMON_PARAMETERS + MODEL_PARAMETERS + [
    Parameter('x0', to_int, default=0, check=non_negative,
              help='starting state index'),
    Parameter('n', to_int, required=True, check=non_negative,
              help='horizon'),
    PARTICLES,
    Parameter('tolerance', to_float, default=1e-10, check=positive,
              help='largest accepted |coalescent - brute_force|'),
]


@op
@with_model
def run(model, x0, n, N, tolerance, stream=None):
    if not isinstance(model, FiniteModel):
        raise Unsupported(
            'Exact variance needs a finite model, got {model}.'.format(
                model=model))
    x_index = state_indices(model, [x0])[0]
    coalescent = coalescent_exact_variance(model, x_index, n, N)
    brute_force = brute_force_variance(model, x_index, n, N)
    difference = coalescent - brute_force

    for key, value in [('model', model.metadata.get('name', 'finite')),
                       ('x0', model.labels[x_index]),
                       ('n', n),
                       ('N', N),
                       ('coalescent', coalescent),
                       ('brute_force', brute_force),
                       ('difference', difference)]:
        stream.write('{key}={value}\n'.format(key=key,
                                              value=format_value(value)))

    if abs(difference) > tolerance:
        logger('cli').error(
            'Coalescent and brute-force variances differ by {diff:.3g} '
            '(tolerance {tolerance:.3g}).'.format(
                diff=difference, tolerance=tolerance))
        return EXIT_CHECK_FAILED
    return EXIT_OK
