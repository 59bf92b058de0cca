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
from fk_particles_common.drift import (
    EVAL_MODES,
    drift_spec,
    check_grid,
    u_plus_v_norm,
    check_drift_var,
    EVAL_FINITE,
    EVAL_CLOSED_FORM,
    cir_lemma_check,
    smallest_drift_level,
    check_mult_drift,
    cir_drift_params,
    check_v_star_drift,
    check_twisted_drift,
    check_iterated_drift,
    q_drift_from_m_drift,
)
from fk_particles_common.config import (
    choice,
    to_int,
    list_of,
    to_float,
    positive,
    Parameter,
    at_least,
    open_interval,
)
from fk_particles_common.models import (
    CirParams,
    QuadraticV,
    cir_v_function,
)
from fk_particles_common.spectral import principal_triple
from fk_particles_common.constants import (
    EXIT_OK,
    MODEL_CIR,
    EXIT_CHECK_FAILED,
)
from fk_particles_common.exceptions import ConfigurationError
from fk_particles_common.serialization import format_drift_report
from fk_particles_common.utils import op, logger
from .parameters import (
    GRID_BOUNDS,
    MODEL_PARAMETERS,
    COMMON_PARAMETERS,
)

NAME = 'drift'
HELP = 'Grid audit of the multiplicative drift condition, printed as a ' \
       'key=value report.'

PARAMETERS = COMMON_PARAMETERS + MODEL_PARAMETERS + GRID_BOUNDS + [
    Parameter('v_a', to_float, default=0.25, check=positive,
              help='V(x) = v_a x^2 + v_c for gaussian-rw and ar'),
    Parameter('v_c', to_float, default=1.0, help='see v_a'),
    Parameter('v_values', list_of(to_float),
              help='per-state V of a finite model (default: log v)'),
    Parameter('s', to_float, check=positive,
              help='CIR drift parameter of V(x) = 1 + 2 c_delta s x'),
    Parameter('drift_delta', to_float, required=True,
              check=open_interval(0, 1), help='drift margin delta'),
    Parameter('d', to_float, check=at_least(1),
              help='sublevel set C_d = {V <= d} (default: the smallest d '
                   'that holds, d_lower for cir)'),
    Parameter('epsilon', to_float, check=positive,
              help='second-order drift exponent'),
    Parameter('epsilon0', to_float, check=positive,
              help='second-order drift margin, 0 < epsilon0 < epsilon'),
    Parameter('eval_mode', choice(EVAL_MODES[:2]), default=EVAL_CLOSED_FORM,
              help='how M(e^V) is evaluated on continuous models'),
    Parameter('n_max', to_int, default=5, check=positive,
              help='largest n of the iterated drift check (finite models)'),
]


def _grid(lower, upper, points):
    return dict((key, value) for key, value in (('lower', lower),
                                                ('upper', upper),
                                                ('points', points))
                if value is not None)


def _level(model, v_fn, delta, d, eval_mode, grid):
    if d is None:
        return smallest_drift_level(model, v_fn, delta, eval_mode=eval_mode,
                                    grid=grid)
    return d


def finite_drift(model, spec, n_max):
    report = check_mult_drift(model, spec)
    iterated = check_iterated_drift(model, spec, report, n_max)
    triple = principal_triple(model)
    twisted = check_twisted_drift(model, triple, spec)
    extra = [('d', spec.d),
             ('iterated_holds', iterated.holds),
             ('iterated_step_bound', iterated.step_bound),
             ('iterated_worst_margin', iterated.worst_margin)]
    holds = report.holds and iterated.holds
    if spec.epsilon is not None:
        second = check_drift_var(model, spec)
        v_star = check_v_star_drift(model, triple, spec)
        extra.extend([('second_order_holds', second.holds),
                      ('b_star', second.b_empirical),
                      ('v_star_rho', v_star.rho),
                      ('v_star_b_prime', v_star.b_prime)])
        holds = holds and second.holds
    report = report._replace(holds=holds, rho=twisted.rho,
                             b_prime=twisted.b_prime)
    return report, extra


def kernel_drift(model, spec, eval_mode, grid):
    report = check_mult_drift(model, spec, eval_mode=eval_mode, grid=grid)
    states = check_grid(model, spec, **grid)
    extra = [('d', spec.d),
             ('v_a', spec.v_fn.a),
             ('v_c', spec.v_fn.c),
             ('u_plus_v_norm', u_plus_v_norm(model, spec.v_fn, states))]
    if spec.epsilon is not None:
        second = check_drift_var(model, spec, eval_mode=eval_mode,
                                 grid=grid)
        extra.extend([('second_order_holds', second.holds),
                      ('b_star', second.b_empirical)])
        report = report._replace(holds=report.holds and second.holds)
    return report, extra


def cir_drift(model, s, delta, d, grid):
    if s is None:
        raise ConfigurationError('s', 'a value is required by model cir')
    params = CirParams(**model.params)
    if d is None:
        d = cir_drift_params(params, s, delta).d_lower
    report = cir_lemma_check(params, s, delta, d)
    spec = drift_spec(cir_v_function(params, s), delta, d)
    norm = u_plus_v_norm(model, spec.v_fn, check_grid(model, spec, **grid))
    extra = [('s', s),
             ('u_plus_v_norm', norm),
             ('b_bar_d', q_drift_from_m_drift(report.details['b_d'], d,
                                              norm))]
    return report, extra


@op
@with_model
def run(model, drift_delta, v_a=0.25, v_c=1.0, v_values=None, s=None,
        d=None, epsilon=None, epsilon0=None, eval_mode=EVAL_CLOSED_FORM,
        lower=None, upper=None, points=None, n_max=5, stream=None):
    grid = _grid(lower, upper, points)
    if isinstance(model, FiniteModel):
        v_fn = None if v_values is None else numpy.asarray(v_values)
        d = _level(model, v_fn, drift_delta, d, EVAL_FINITE, None)
        spec = drift_spec(v_fn, drift_delta, d, epsilon, epsilon0)
        report, extra = finite_drift(model, spec, n_max)
    elif model.name == MODEL_CIR:
        report, extra = cir_drift(model, s, drift_delta, d, grid)
    else:
        v_fn = QuadraticV(v_a, v_c)
        d = _level(model, v_fn, drift_delta, d, eval_mode, grid)
        spec = drift_spec(v_fn, drift_delta, d, epsilon, epsilon0)
        report, extra = kernel_drift(model, spec, eval_mode, grid)

    stream.write(format_drift_report(report, extra))
    if not report.holds:
        logger('cli').error('Drift condition does not hold.')
        return EXIT_CHECK_FAILED
    return EXIT_OK
