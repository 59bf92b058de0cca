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

"""Grid certification of multiplicative drift and minorization conditions.

Reports say an inequality was verified at a number of states with a
margin; nothing here is a proof on the continuous state space.
"""

# Stdlib imports
from collections import namedtuple

# Third party imports
import numpy
from scipy.special import logsumexp

# This package imports
from .core import FiniteModel, log_step, iterate_log
from .models import cir_v_function, cir_exp_v_closed_form
from .spectral import SmallSetCertificate, twisted_kernel
from .constants import (
    DRIFT_TAIL_RATIO,
    DRIFT_GRID_POINTS,
    STATE_SPACE_POSITIVE,
    DRIFT_GRID_LEVEL_FACTOR,
)
from .exceptions import (
    DriftFailure,
    NoMinorization,
    InvalidArgument,
    DivergentIntegral,
)
from .utils import logger

EVAL_CLOSED_FORM = 'closed-form'
EVAL_QUADRATURE = 'quadrature'
EVAL_FINITE = 'finite'
EVAL_MODES = [EVAL_CLOSED_FORM, EVAL_QUADRATURE, EVAL_FINITE]

QUADRATURE_WIDTH = 60.0
QUADRATURE_NODES = 6001
QUADRATURE_CHUNK = 256
MARGIN_SLACK = 1e-12
DRIFT_LEVEL_ROUNDS = 50

DriftSpec = namedtuple('DriftSpec',
                       ['v_fn', 'delta', 'd', 'epsilon', 'epsilon0'])
DriftReport = namedtuple(
    'DriftReport',
    ['holds', 'b_empirical', 'worst_violation', 'check_points', 'rho',
     'b_prime', 'details'])
DriftReport.__new__.__defaults__ = (None, None, None)
Violation = namedtuple('Violation', ['state', 'margin'])
IteratedDrift = namedtuple('IteratedDrift',
                           ['holds', 'worst_margin', 'step_bound', 'n_max'])


class CirDrift(namedtuple('CirDrift', ['d_lower', 'ratio', 'log_factor'])):
    """Constants of the CIR drift lemma.

    ratio = e^{-theta delta} / (1 - 2s) and
    log_factor = (2 theta mu / sigma^2) log(1 - 2s).
    """

    __slots__ = ()

    def b_d(self, d):
        return d * self.ratio - self.log_factor + 1.0


def drift_spec(v_fn, delta, d, epsilon=None, epsilon0=None):
    if not 0 < delta < 1:
        raise InvalidArgument(
            'Drift margin delta must lie in (0, 1), got {delta}.'.format(
                delta=delta))
    if not d >= 1:
        raise InvalidArgument(
            'Sublevel d must be >= 1, got {d}.'.format(d=d))
    if (epsilon is None) != (epsilon0 is None):
        raise InvalidArgument('epsilon and epsilon0 go together.')
    if epsilon is not None and not 0 < epsilon0 < epsilon:
        raise InvalidArgument(
            'Need 0 < epsilon0 < epsilon, got epsilon0={e0} and '
            'epsilon={e}.'.format(e0=epsilon0, e=epsilon))
    return DriftSpec(v_fn, float(delta), float(d), epsilon, epsilon0)


def _finite_v(model, spec):
    if spec.v_fn is None:
        return numpy.log(model.v)
    values = numpy.asarray(spec.v_fn, dtype=float)
    if values.shape != (model.size,):
        raise InvalidArgument(
            'Finite drift checks need one V value per state.')
    return values


def check_grid(model, spec, lower=None, upper=None,
               points=DRIFT_GRID_POINTS):
    """Uniform grid spanning C_{3d} unless bounds are given."""
    if lower is None or upper is None:
        interval = spec.v_fn.sublevel_interval(
            DRIFT_GRID_LEVEL_FACTOR * spec.d)
        if interval is None or not numpy.all(numpy.isfinite(interval)):
            raise InvalidArgument(
                'C_{{3d}} of {v} is not a bounded interval; give explicit '
                'grid bounds.'.format(v=spec.v_fn))
        lower = interval[0] if lower is None else lower
        upper = interval[1] if upper is None else upper
    if model.state_space == STATE_SPACE_POSITIVE and lower <= 0:
        return numpy.linspace(upper / points, upper, int(points))
    return numpy.linspace(lower, upper, int(points))


def quadrature_log_exp_v(kernel, v_fn, states, positive=False):
    """log M(e^V)(x) by log-space trapezoid quadrature around each x.

    Raises DivergentIntegral when the integrand at a truncated end is not
    negligible against its peak.
    """
    states = numpy.atleast_1d(numpy.asarray(states, dtype=float))
    result = numpy.empty(states.size)
    offsets = numpy.linspace(-QUADRATURE_WIDTH, QUADRATURE_WIDTH,
                             QUADRATURE_NODES)
    for start in range(0, states.size, QUADRATURE_CHUNK):
        x = states[start:start + QUADRATURE_CHUNK]
        mean, std = kernel.moments(x)
        nodes = mean[:, None] + std[:, None] * offsets[None, :]
        clipped = numpy.zeros(x.size, dtype=bool)
        if positive:
            clipped = nodes[:, 0] <= 0
            low = numpy.where(clipped, 1e-9 * nodes[:, -1], nodes[:, 0])
            nodes = low[:, None] + (nodes[:, -1] - low)[:, None] * \
                numpy.linspace(0.0, 1.0, QUADRATURE_NODES)[None, :]
        with numpy.errstate(divide='ignore', over='ignore'):
            integrand = kernel.log_density(x[:, None], nodes) + v_fn(nodes)
        peak = integrand.max(axis=1)
        tail = numpy.log(DRIFT_TAIL_RATIO)
        ends = numpy.where(clipped, integrand[:, -1],
                           numpy.maximum(integrand[:, 0], integrand[:, -1]))
        bad = ~numpy.isfinite(peak) | (ends - peak > tail)
        if numpy.any(bad):
            raise DivergentIntegral(
                'M(e^V)(x) does not converge for {v} at x={x:.6g}: the '
                'integrand does not decay within {width} standard '
                'deviations.'.format(v=v_fn, x=x[bad][0],
                                     width=QUADRATURE_WIDTH))
        steps = numpy.diff(nodes, axis=1)
        log_w = numpy.log(numpy.concatenate(
            [steps[:, :1] / 2, (steps[:, 1:] + steps[:, :-1]) / 2,
             steps[:, -1:] / 2], axis=1))
        result[start:start + x.size] = logsumexp(integrand + log_w, axis=1)
    return result


def log_m_exp_v(model, v_fn, states, eval_mode=EVAL_CLOSED_FORM):
    if eval_mode == EVAL_CLOSED_FORM:
        return numpy.asarray(model.kernel.log_exp_v_integral(states, v_fn),
                             dtype=float)
    if eval_mode == EVAL_QUADRATURE:
        return quadrature_log_exp_v(
            model.kernel, v_fn, states,
            positive=model.state_space == STATE_SPACE_POSITIVE)
    raise InvalidArgument(
        'Unknown eval mode {mode}; expected one of {modes}.'.format(
            mode=eval_mode, modes=', '.join(EVAL_MODES)))


def _log_q_exp(model, spec, factor, eval_mode, grid):
    """(states, V, log Q(e^{factor V})) for a finite or continuous model."""
    if isinstance(model, FiniteModel) or eval_mode == EVAL_FINITE:
        if not isinstance(model, FiniteModel):
            raise InvalidArgument('Finite eval mode needs a FiniteModel.')
        v = _finite_v(model, spec)
        _, log_q = log_step(model, numpy.ones(model.size), factor * v)
        return numpy.arange(model.size), v, log_q
    states = check_grid(model, spec, **(grid or {}))
    v_fn = spec.v_fn if factor == 1 else spec.v_fn.scaled(factor)
    log_q = model.potential(states) + log_m_exp_v(model, v_fn, states,
                                                  eval_mode)
    return states, spec.v_fn(states), log_q


def _report(states, v, margin, d, extra=None):
    inside = v <= d
    outside = ~inside
    b_empirical = float(margin[inside].max()) if inside.any() else 0.0
    worst = None
    violated = outside & (margin > MARGIN_SLACK * numpy.maximum(1.0,
                                                                numpy.abs(v)))
    if violated.any():
        index = numpy.flatnonzero(violated)[
            numpy.argmax(margin[violated])]
        worst = Violation(states[index], float(margin[index]))
    holds = worst is None and numpy.isfinite(b_empirical)
    return DriftReport(holds=bool(holds), b_empirical=b_empirical,
                       worst_violation=worst, check_points=int(states.size),
                       details=extra)


def check_mult_drift(model, spec, eval_mode=EVAL_CLOSED_FORM, grid=None):
    """Q(e^V) <= e^{V(1-delta) + b 1_{C_d}} on a grid of states.

    :param grid: optional dict with `lower`, `upper` and `points`.
    """
    states, v, log_q = _log_q_exp(model, spec, 1.0, eval_mode, grid)
    report = _report(states, v, log_q - v * (1 - spec.delta), spec.d)
    _log_report('Multiplicative drift', report)
    return report


def smallest_drift_level(model, v_fn, delta, eval_mode=EVAL_CLOSED_FORM,
                         grid=None, max_rounds=DRIFT_LEVEL_ROUNDS):
    """Smallest d >= 1 for which the drift holds outside C_d on the grid.

    The default check grid spans C_{3d} and moves with d, so d is raised to
    the largest V of the violating states until none is left.
    """
    d = 1.0
    for _ in range(int(max_rounds)):
        spec = drift_spec(v_fn, delta, d)
        _, v, log_q = _log_q_exp(model, spec, 1.0, eval_mode, grid)
        margin = log_q - v * (1 - delta)
        violated = (v > d) & (margin > MARGIN_SLACK *
                              numpy.maximum(1.0, numpy.abs(v)))
        if not violated.any():
            logger('drift').info(
                'Smallest sublevel with a holding drift: d = {d:.12g}.'.format(
                    d=d))
            return d
        d = float(v[violated].max())
    raise DriftFailure(
        'No sublevel C_d makes the drift hold within {rounds} rounds; last '
        'd = {d:.6g}.'.format(rounds=max_rounds, d=d))


def check_drift_var(model, spec, eval_mode=EVAL_CLOSED_FORM, grid=None):
    """Q(e^{(1+eps)V}) <= e^{(eps - eps0)V + b* 1_{C_d}}."""
    if spec.epsilon is None:
        raise InvalidArgument('check_drift_var needs epsilon and epsilon0.')
    factor = 1.0 + spec.epsilon
    states, v, log_q = _log_q_exp(model, spec, factor, eval_mode, grid)
    margin = log_q - (factor * v - (1.0 + spec.epsilon0) * v)
    report = _report(states, v, margin, spec.d)
    _log_report('Second-order drift', report)
    return report


def _log_report(label, report):
    if report.holds:
        logger('drift').info(
            '{label} verified at {count} states; b = {b:.6g}.'.format(
                label=label, count=report.check_points,
                b=report.b_empirical))
    else:
        logger('drift').error(
            '{label} fails at {count} checked states; worst {worst}.'.format(
                label=label, count=report.check_points,
                worst=report.worst_violation))


def estimate_minorization(model, m0, d, v_weights=None):
    """Small-set certificate from the componentwise minimum of Q_{m0} rows."""
    if int(m0) < 1:
        raise InvalidArgument('m0 must be >= 1, got {m0}.'.format(m0=m0))
    v = model.v if v_weights is None else numpy.asarray(v_weights, float)
    c_mask = numpy.log(v) <= d
    if not c_mask.any():
        raise InvalidArgument(
            'C_d = {{V <= {d}}} contains no state.'.format(d=d))
    power = numpy.linalg.matrix_power(model.dense(), int(m0))
    floor = power[c_mask].min(axis=0)
    epsilon = float(floor.sum())
    if epsilon <= 0:
        raise NoMinorization(
            'Rows of Q^{m0} over C_d have disjoint supports.'.format(m0=m0))
    return SmallSetCertificate(int(m0), epsilon, floor / epsilon, c_mask)


def cir_drift_params(params, s, delta):
    """d_lower and b_d of the CIR drift lemma for V = cir_v_function(s)."""
    decay = params.decay
    s_max = (1.0 - decay) / 2.0
    if not 0 < s < s_max:
        raise InvalidArgument(
            'CIR drift needs s in (0, {upper:.8g}), got {s}.'.format(
                upper=s_max, s=s))
    ratio = decay / (1.0 - 2.0 * s)
    if not 0 < delta < 1.0 - ratio:
        raise InvalidArgument(
            'CIR drift needs delta in (0, {upper:.8g}), got {delta}.'.format(
                upper=1.0 - ratio, delta=delta))
    log_factor = params.feller_ratio * numpy.log(1.0 - 2.0 * s)
    d_lower = (1.0 - log_factor) / (1.0 - ratio - delta)
    return CirDrift(float(d_lower), float(ratio), float(log_factor))


def cir_lemma_check(params, s, delta, d=None, xs=None):
    """Cross-check the CIR lemma against the closed-form MGF.

    The closed form must equal 1 + (V - 1) ratio - log_factor, stay below
    V (1 - delta) outside C_d and below b_d inside.
    """
    constants = cir_drift_params(params, s, delta)
    d = constants.d_lower if d is None else d
    if d < constants.d_lower:
        raise InvalidArgument(
            'd = {d} is below d_lower = {lower:.8g}.'.format(
                d=d, lower=constants.d_lower))
    xs = numpy.linspace(0.5, 50.0, 100) if xs is None else \
        numpy.asarray(xs, dtype=float)
    v = cir_v_function(params, s)(xs)
    closed = cir_exp_v_closed_form(params, s, xs)
    lemma = 1.0 + (v - 1.0) * constants.ratio - constants.log_factor
    identity_error = float(numpy.max(numpy.abs(closed - lemma) /
                                     numpy.maximum(1.0, numpy.abs(lemma))))
    inside = v <= d
    margin = numpy.where(inside, closed - constants.b_d(d),
                         closed - v * (1.0 - delta))
    report = _report(xs, v, closed - v * (1.0 - delta), d, extra={
        'd': d,
        'd_lower': constants.d_lower,
        'b_d': constants.b_d(d),
        'identity_error': identity_error,
        'inside_points': int(inside.sum()),
    })
    within = bool(numpy.all(margin[inside] <= MARGIN_SLACK * numpy.maximum(
        1.0, numpy.abs(closed[inside]))))
    holds = report.holds and within and identity_error <= 1e-12
    report = report._replace(holds=holds)
    _log_report('CIR drift lemma', report)
    return report


def u_plus_v_norm(model, v_fn, grid):
    """sup_x U+(x) / V(x) over grid states."""
    states = numpy.asarray(grid, dtype=float)
    return float(numpy.max(model.potential.positive_part(states) /
                           v_fn(states)))


def kernel_v_norm(model, v_fn, grid, eval_mode=EVAL_CLOSED_FORM):
    """sup_x M(e^V)(x) / e^{V(x)} over grid states."""
    states = numpy.asarray(grid, dtype=float)
    return float(numpy.exp(numpy.max(
        log_m_exp_v(model, v_fn, states, eval_mode) - v_fn(states))))


def q_drift_from_m_drift(b_d, d, u_plus_norm):
    """Drift constant for Q from one for M: b_d + d ||U+||_V."""
    return b_d + d * u_plus_norm


def check_iterated_drift(model, spec, report, n_max=5):
    """Q_n(e^V) <= e^{V(1-delta) + n b} for n <= n_max on a finite model.

    One step of the certified inequality plus Jensen's bound
    Q(e^{(1-delta)V}) <= Q(1)^delta Q(e^V)^{1-delta} gives the per-step
    constant b = max(b_empirical, 0) + delta max(U+).
    """
    v = _finite_v(model, spec)
    step_bound = max(report.b_empirical, 0.0) + spec.delta * max(
        float(model.log_potential.max()), 0.0)
    worst = -numpy.inf
    for n in range(1, int(n_max) + 1):
        _, log_q = iterate_log(model, n, numpy.exp(v))
        margin = log_q - (v * (1 - spec.delta) + n * step_bound)
        worst = max(worst, float(margin.max()))
    holds = worst <= MARGIN_SLACK * max(1.0, float(numpy.abs(v).max()))
    return IteratedDrift(bool(holds), worst, step_bound, int(n_max))


def _twisted_log_image(model, triple, log_f):
    twisted = twisted_kernel(model, triple)
    with numpy.errstate(divide='ignore'):
        log_p = numpy.log(twisted)
    return logsumexp(log_p + log_f[None, :], axis=1)


def _geometric_constants(values, log_image, c_mask, state_labels):
    outside = ~c_mask
    ratio = numpy.exp(log_image - values)
    rho = float(ratio[outside].max()) if outside.any() else 0.0
    if rho >= 1:
        index = numpy.flatnonzero(outside)[numpy.argmax(ratio[outside])]
        logger('drift').error(
            'Twisted drift ratio {rho:.6g} >= 1 at state {state}.'.format(
                rho=rho, state=state_labels[index]))
        raise DriftFailure(
            'No rho < 1 satisfies the twisted drift: ratio {rho:.6g} at '
            'state {state}.'.format(rho=rho, state=state_labels[index]),
            state=state_labels[index], margin=rho - 1.0)
    gaps = numpy.exp(log_image[c_mask]) - rho * numpy.exp(values[c_mask])
    b_prime = float(max(gaps.max(), 0.0)) if c_mask.any() else 0.0
    return rho, b_prime


def check_twisted_drift(model, triple, spec):
    """P(e^W) <= rho e^W + b' 1_{C_d} for the twisted kernel P.

    W = V - log h0 + log ||h0||_v. rho is the smallest value valid outside
    C_d (0 when C_d is every state) and b' the smallest valid inside given
    that rho.
    """
    v = _finite_v(model, spec)
    h0 = numpy.asarray(triple.h0, dtype=float)
    w = v - numpy.log(h0) + numpy.log(numpy.max(h0 / numpy.exp(v)))
    log_image = _twisted_log_image(model, triple, w)
    c_mask = v <= spec.d
    rho, b_prime = _geometric_constants(w, log_image, c_mask, model.labels)
    report = DriftReport(holds=True,
                         worst_violation=None,
                         b_empirical=float(numpy.max(log_image - w)),
                         check_points=model.size, rho=rho, b_prime=b_prime,
                         details={'w': w})
    logger('drift').info(
        'Twisted drift: rho = {rho:.6g}, b\' = {b:.6g}.'.format(
            rho=rho, b=b_prime))
    return report


def check_v_star_drift(model, triple, spec):
    """P(e^{V*}) <= e^{V* - V + b 1_{C_d}} and its geometric form.

    V* = (1 + eps) V - log h0 + log ||h0||_{v^{1+eps}}.
    """
    if spec.epsilon is None:
        raise InvalidArgument('check_v_star_drift needs epsilon.')
    v = _finite_v(model, spec)
    h0 = numpy.asarray(triple.h0, dtype=float)
    factor = 1.0 + spec.epsilon
    v_star = factor * v - numpy.log(h0) + numpy.log(
        numpy.max(h0 / numpy.exp(factor * v)))
    log_image = _twisted_log_image(model, triple, v_star)
    c_mask = v <= spec.d
    report = _report(numpy.asarray(model.labels), v,
                     log_image - (v_star - v), spec.d,
                     extra={'v_star': v_star})
    if not report.holds:
        violation = report.worst_violation
        logger('drift').error(
            'V* drift fails at state {state} by {margin:.6g}.'.format(
                state=violation.state, margin=violation.margin))
        raise DriftFailure(
            'P(e^V*) exceeds e^(V* - V) at state {state} by a log margin of '
            '{margin:.6g}.'.format(state=violation.state,
                                   margin=violation.margin),
            state=violation.state, margin=violation.margin)
    rho, b_prime = _geometric_constants(v_star, log_image, c_mask,
                                        model.labels)
    return report._replace(rho=rho, b_prime=b_prime)
