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
import numpy

# This package imports
from fk_particles_common import with_model
from fk_particles_common.core import FiniteModel
from fk_particles_common.config import (
    to_int,
    to_bool,
    list_of,
    to_float,
    Parameter,
    at_least,
)
from fk_particles_common.models import gamma_oracle
from fk_particles_common.variance import (
    exact_oracle,
    growth_summary,
    experiment_plan,
    unbiasedness_check,
    relative_variance_mc,
)
from fk_particles_common.constants import EXIT_OK, EXIT_CHECK_FAILED
from fk_particles_common.serialization import (
    write_variance_table,
    write_unbiased_table,
)
from fk_particles_common.utils import op, logger
from .parameters import (
    HORIZONS,
    PARTICLES,
    state_indices,
    GRID_PARAMETERS,
    MODEL_PARAMETERS,
    COMMON_PARAMETERS,
)

NAME = 'variance'
HELP = 'Monte Carlo relative variance of the particle estimate of ' \
       'gamma_n(1), one CSV row per (x0, n).'

PARAMETERS = COMMON_PARAMETERS + MODEL_PARAMETERS + GRID_PARAMETERS + [
    Parameter('x0', list_of(to_float), default='0',
              help='comma separated starting states (state indices for '
                   'finite models)'),
    HORIZONS,
    PARTICLES,
    Parameter('R', to_int, required=True, check=at_least(2),
              help='independent replicates per cell'),
    Parameter('check_unbiased', to_bool, default='false',
              help='report z-scores of mean gamma^N / gamma - 1 instead'),
]


@op
@with_model
def run(model, x0, n, N, R, seed, threads=None, lower=None, upper=None,
        points=None, rule=None, band=None, check_unbiased=False,
        stream=None):
    if isinstance(model, FiniteModel):
        x0_list = state_indices(model, x0)
        oracle = exact_oracle(model, x0_list, n)
    else:
        x0_list = [float(value) for value in x0]
        oracle, _ = gamma_oracle(model, x0_list, n, lower, upper, points,
                                 rule=rule, band=band)
    plan = experiment_plan(model, x0_list, n, N, R, seed)

    if check_unbiased:
        rows = unbiasedness_check(plan, oracle, threads=threads)
        write_unbiased_table(rows, stream)
        invalid = [row for row in rows if row.flagged]
    else:
        rows = relative_variance_mc(plan, oracle, threads=threads)
        write_variance_table(rows, stream)
        for fit in growth_summary(rows):
            logger('cli').info(
                'x0={x0}: rel_var ~ {slope:.6g} n + {intercept:.6g} '
                '(R^2 = {r_squared:.4f})'.format(**fit._asdict()))
        invalid = [row for row in rows
                   if row.failures or not numpy.isfinite(row.rel_var)]

    if invalid:
        logger('cli').error(
            '{count} of {total} cells are invalid: {cells}.'.format(
                count=len(invalid), total=len(rows),
                cells=', '.join('(x0={0}, n={1})'.format(row.x0, row.n)
                                for row in invalid)))
        return EXIT_CHECK_FAILED
    return EXIT_OK
