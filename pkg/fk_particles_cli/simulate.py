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
    to_float,
    Parameter,
    non_negative,
)
from fk_particles_common.engine import run as run_particles, SeedSpec
from fk_particles_common.models import CirParams, cir_geometric_mean
from fk_particles_common.constants import EXIT_OK, MODEL_CIR
from fk_particles_common.serialization import write_run_record
from fk_particles_common.utils import op, logger
from .parameters import (
    PARTICLES,
    state_indices,
    MODEL_PARAMETERS,
    COMMON_PARAMETERS,
)

NAME = 'simulate'
HELP = 'One particle run: per-step log mean weights and the running ' \
       'log gamma^N estimate as CSV.'

PARAMETERS = COMMON_PARAMETERS + MODEL_PARAMETERS + [
    Parameter('x0', to_float, default=0.0,
              help='starting state (a state index for finite models)'),
    Parameter('n', to_int, required=True, check=non_negative,
              help='horizon'),
    PARTICLES,
    Parameter('replicate', to_int, default=0, check=non_negative,
              help='replicate index mixed into the seed'),
]


@op
@with_model
def run(model, x0, n, N, seed, replicate=0, stream=None):
    if isinstance(model, FiniteModel):
        start = state_indices(model, [x0])[0]
        model = model.to_fk_model()
    else:
        start = x0
    record = run_particles(model, start, n, N, SeedSpec(seed, replicate))
    write_run_record(record, stream)
    logger('cli').info(
        'log gamma^N_{n}(1) = {value!r} from x0={x0} with N={N}.'.format(
            n=n, value=record.log_gamma, x0=x0, N=N))

    if model.name == MODEL_CIR and n and \
            numpy.isclose(model.params['alpha'] * n, 1.0):
        logger('cli').info(
            'alpha = 1/n: the estimate reads as E[(X_0 ... X_{last})^(1/n)]'
            ' = {value:.10g}.'.format(
                last=n - 1,
                value=cir_geometric_mean(record, CirParams(**model.params))))
    return EXIT_OK
