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
from fk_particles_common.core import FiniteModel, discretize
from fk_particles_common.drift import estimate_minorization
from fk_particles_common.config import (
    to_int,
    to_float,
    positive,
    Parameter,
    at_least,
    non_negative,
)
from fk_particles_common.spectral import (
    met_decay,
    principal_triple,
    variance_threshold_phi,
    spectral_radius_lower_bound,
)
from fk_particles_common.constants import EXIT_OK, B0_CLAMP
from fk_particles_common.exceptions import ConfigurationError
from fk_particles_common.serialization import write_spectral_triple
from fk_particles_common.utils import op, logger
from .parameters import (
    state_indices,
    GRID_PARAMETERS,
    MODEL_PARAMETERS,
    COMMON_PARAMETERS,
)

NAME = 'spectral'
HELP = 'Principal eigen-triple of Q with the MET decay fit and the ' \
       'per-state particle threshold column.'

PARAMETERS = COMMON_PARAMETERS + MODEL_PARAMETERS + GRID_PARAMETERS + [
    Parameter('met_state', to_int, default=0, check=non_negative,
              help='state index the MET gaps are measured at'),
    Parameter('met_horizon', to_int, default=30, check=at_least(2),
              help='largest n of the MET fit'),
    Parameter('c1', to_int, default=1, check=positive,
              help='constant multiplying the particle threshold'),
    Parameter('m0', to_int, check=positive,
              help='minorization horizon; also reports the spectral '
                   'radius lower bound when set'),
    Parameter('d', to_float, default=1.0, check=at_least(1),
              help='small set C_d = {log v <= d} of the minorization'),
]


def finite_view(model, lower, upper, points, rule, band):
    if isinstance(model, FiniteModel):
        return model
    for key, value in (('lower', lower), ('upper', upper),
                       ('points', points)):
        if value is None:
            raise ConfigurationError(
                key, 'a value is required to discretize model {name}'.format(
                    name=model.name))
    kwargs = {'band': band}
    if rule:
        kwargs['rule'] = rule
    return discretize(model, lower, upper, points, **kwargs)


@op
@with_model
def run(model, met_state, met_horizon, c1, d, m0=None, lower=None,
        upper=None, points=None, rule=None, band=None, stream=None):
    finite = finite_view(model, lower, upper, points, rule, band)
    triple = principal_triple(finite)

    index = state_indices(finite, [met_state], key='met_state')[0]
    indicator = numpy.zeros(finite.size)
    indicator[index] = 1.0
    met = met_decay(finite, triple, index,
                    [numpy.ones(finite.size), indicator],
                    range(1, met_horizon + 1))
    logger('cli').info(
        'MET fit at state {state}: B0 = {B0:.6g}, B1 = {B1:.6g} '
        '(R^2 = {r_squared:.4f}, log(lambda / |lambda_2|) = '
        '{bound:.6g}).'.format(state=finite.labels[index], B0=met.B0,
                               B1=met.B1, r_squared=met.r_squared,
                               bound=met.rate_bound))
    if met.B0 <= 1:
        logger('cli').warning(
            'B0 = {value} <= 1 clamped to {clamp} for every state.'.format(
                value=met.B0, clamp=B0_CLAMP))
        met = met._replace(B0=B0_CLAMP)

    thresholds, floored = [], []
    for state in range(finite.size):
        if triple.h0[state] > 0:
            threshold = variance_threshold_phi(state, finite.v, triple, met,
                                               c1)
            thresholds.append(threshold.value)
            if threshold.floored:
                floored.append(finite.labels[state])
        else:
            thresholds.append(numpy.nan)
    if floored:
        logger('cli').info(
            'phi threshold floored at c1 = {c1} for {count} states (first '
            '{first}).'.format(c1=c1, count=len(floored), first=floored[0]))
    write_spectral_triple(triple, finite.labels, stream,
                          extra=[('phi_threshold', thresholds)])

    if m0:
        certificate = estimate_minorization(finite, m0, d)
        bound = spectral_radius_lower_bound(certificate, triple)
        logger('cli').info(
            'Minorization with m0={m0}: epsilon = {epsilon:.6g}; '
            'epsilon nu(C) = {lower:.6g} <= lambda^m0 = {upper:.6g}.'.format(
                m0=m0, epsilon=certificate.epsilon, lower=bound.lower,
                upper=bound.upper))
    return EXIT_OK
