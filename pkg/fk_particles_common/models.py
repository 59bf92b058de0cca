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
from collections import namedtuple

# Third party imports
import numpy
from scipy.stats import ncx2

# This package imports
from .core import (
    FKModel,
    LogPotential,
    MarkovKernel,
    grid_gamma_oracle,
)
from .constants import (
    MODEL_AR,
    MODEL_CIR,
    MODEL_GAUSSIAN_RW,
    AR_GRID_STEP,
    AR_GRID_MARGIN,
    CIR_GRID_SPACING,
    AR_GRID_HALF_WIDTH,
    DEFAULT_BAND_WIDTH,
    STATE_SPACE_POSITIVE,
    STATE_SPACE_REAL_LINE,
)
from .exceptions import (
    InvalidArgument,
    DivergentIntegral,
    NonRecoverableError,
)
from .utils import logger

LOG_SQRT_2PI = 0.5 * numpy.log(2.0 * numpy.pi)


class QuadraticV(namedtuple('QuadraticV', ['a', 'c'])):
    """V(x) = a x^2 + c."""

    __slots__ = ()

    def __call__(self, x):
        x = numpy.asarray(x, dtype=float)
        return self.a * x ** 2 + self.c

    def sublevel_interval(self, level):
        """C_d = {V <= level} as (lower, upper), or None when empty."""
        if level < self.c:
            return None
        if self.a <= 0:
            return -numpy.inf, numpy.inf
        half = numpy.sqrt((level - self.c) / self.a)
        return -half, half

    def scaled(self, factor):
        return QuadraticV(self.a * factor, self.c * factor)

    def __str__(self):
        return 'V(x) = {a}*x^2 + {c}'.format(a=self.a, c=self.c)


class LinearV(namedtuple('LinearV', ['slope', 'intercept'])):
    """V(x) = slope * x + intercept, for states on the positive half-line."""

    __slots__ = ()

    def __call__(self, x):
        x = numpy.asarray(x, dtype=float)
        return self.slope * x + self.intercept

    def sublevel_interval(self, level):
        if level < self.intercept:
            return None
        if self.slope <= 0:
            return 0.0, numpy.inf
        return 0.0, (level - self.intercept) / self.slope

    def scaled(self, factor):
        return LinearV(self.slope * factor, self.intercept * factor)

    def __str__(self):
        return 'V(x) = {s}*x + {c}'.format(s=self.slope, c=self.intercept)


class GaussianKernel(MarkovKernel):
    """x' = coefficient * x + xi with xi standard normal."""

    has_density = True

    def __init__(self, coefficient=1.0, name=MODEL_GAUSSIAN_RW):
        self.coefficient = float(coefficient)
        self.name = name

    def sample(self, states, generator):
        states = numpy.asarray(states, dtype=float)
        return self.coefficient * states + \
            generator.standard_normal(states.shape)

    def log_density(self, x, y):
        x = numpy.asarray(x, dtype=float)
        y = numpy.asarray(y, dtype=float)
        return -0.5 * (y - self.coefficient * x) ** 2 - LOG_SQRT_2PI

    def moments(self, x):
        x = numpy.asarray(x, dtype=float)
        return self.coefficient * x, numpy.ones_like(x)

    def log_exp_v_integral(self, x, v_fn):
        """log E[exp(a (m + xi)^2 + c)] = c - log(1-2a)/2 + a m^2/(1-2a)."""
        if not isinstance(v_fn, QuadraticV):
            return super(GaussianKernel, self).log_exp_v_integral(x, v_fn)
        if v_fn.a >= 0.5:
            raise DivergentIntegral(
                'E[exp(a (m + xi)^2)] is infinite for a = {a} >= 1/2 '
                '({v}).'.format(a=v_fn.a, v=v_fn))
        mean = self.coefficient * numpy.asarray(x, dtype=float)
        scale = 1.0 - 2.0 * v_fn.a
        return v_fn.c - 0.5 * numpy.log(scale) + v_fn.a * mean ** 2 / scale


class CirParams(namedtuple('CirParams',
                           ['theta', 'mu', 'sigma', 'delta', 'alpha'])):
    """Cox-Ingersoll-Ross skeleton parameters and the potential exponent."""

    __slots__ = ()

    @property
    def decay(self):
        return numpy.exp(-self.theta * self.delta)

    @property
    def kappa(self):
        return 4.0 * self.theta * self.mu / self.sigma ** 2

    @property
    def c_delta(self):
        return 2.0 * self.theta / (self.sigma ** 2 * (1.0 - self.decay))

    @property
    def feller_ratio(self):
        return 2.0 * self.theta * self.mu / self.sigma ** 2

    def noncentrality(self, x):
        return 2.0 * self.c_delta * numpy.asarray(x, dtype=float) * \
            self.decay

    def validate(self):
        for name in ('theta', 'mu', 'sigma', 'delta'):
            value = getattr(self, name)
            if not value > 0:
                raise InvalidArgument(
                    'CIR parameter {name} must be > 0, got {value}.'.format(
                        name=name, value=value))
        if not self.feller_ratio > 1:
            raise InvalidArgument(
                'CIR parameters need 2*theta*mu/sigma^2 > 1, got '
                '{ratio:.6g}.'.format(ratio=self.feller_ratio))
        return self


class CirKernel(MarkovKernel):
    """Exact CIR transition over one step of length delta.

    2 c_delta X' given X = x is noncentral chi-square with kappa degrees of
    freedom and noncentrality 2 c_delta x e^{-theta delta}; draws use the
    Poisson mixture J ~ Poisson(nc/2), Z ~ Gamma(kappa/2 + J, scale=2).
    """

    name = MODEL_CIR
    has_density = True

    def __init__(self, params):
        self.params = params.validate()

    def sample(self, states, generator):
        states = numpy.asarray(states, dtype=float)
        params = self.params
        mixing = generator.poisson(params.noncentrality(states) / 2.0)
        draws = generator.gamma(params.kappa / 2.0 + mixing, 2.0)
        result = draws / (2.0 * params.c_delta)
        if numpy.any(result <= 0):
            raise NonRecoverableError(
                'CIR sampler produced a non-positive state.')
        return result

    def log_density(self, x, y):
        params = self.params
        x = numpy.asarray(x, dtype=float)
        y = numpy.asarray(y, dtype=float)
        scale = 2.0 * params.c_delta
        with numpy.errstate(divide='ignore'):
            return ncx2.logpdf(scale * y, params.kappa,
                               params.noncentrality(x)) + numpy.log(scale)

    def moments(self, x):
        params = self.params
        x = numpy.asarray(x, dtype=float)
        decay = params.decay
        mean = x * decay + params.mu * (1.0 - decay)
        variance = (x * params.sigma ** 2 * decay * (1.0 - decay) /
                    params.theta +
                    params.mu * params.sigma ** 2 * (1.0 - decay) ** 2 /
                    (2.0 * params.theta))
        return mean, numpy.sqrt(variance)

    def log_exp_v_integral(self, x, v_fn):
        """Noncentral chi-square MGF for V(x) = intercept + 2 c_delta s x."""
        if not isinstance(v_fn, LinearV):
            return super(CirKernel, self).log_exp_v_integral(x, v_fn)
        s = v_fn.slope / (2.0 * self.params.c_delta)
        if s >= 0.5:
            raise DivergentIntegral(
                'CIR moment generating function has a pole at s = 1/2, got '
                's = {s:.6g} ({v}).'.format(s=s, v=v_fn))
        return _cir_log_mgf(self.params, s, x) + v_fn.intercept


def _cir_log_mgf(params, s, x):
    x = numpy.asarray(x, dtype=float)
    return (2.0 * params.c_delta * x * s * params.decay / (1.0 - 2.0 * s) -
            params.kappa / 2.0 * numpy.log(1.0 - 2.0 * s))


def gaussian_rw_model():
    """Gaussian random walk with U(x) = -x^2."""
    return FKModel(GaussianKernel(1.0, name=MODEL_GAUSSIAN_RW),
                   LogPotential(lambda x: -x ** 2, name='-x^2'),
                   STATE_SPACE_REAL_LINE,
                   name=MODEL_GAUSSIAN_RW,
                   params={})


def ar_model(alpha):
    """AR(1) chain x' = alpha x + xi with U(x) = |x|."""
    alpha = float(alpha)
    if not abs(alpha) < 1:
        raise InvalidArgument(
            'AR coefficient needs |alpha| < 1, got {alpha}.'.format(
                alpha=alpha))
    return FKModel(GaussianKernel(alpha, name=MODEL_AR),
                   LogPotential(numpy.abs, name='|x|'),
                   STATE_SPACE_REAL_LINE,
                   name=MODEL_AR,
                   params={'alpha': alpha})


def cir_model(params):
    """Exact CIR skeleton with U(x) = alpha log x."""
    params = CirParams(*[float(value) for value in params])
    kernel = CirKernel(params)

    def cir_potential(x):
        with numpy.errstate(divide='ignore', invalid='ignore'):
            return params.alpha * numpy.log(x)

    return FKModel(kernel,
                   LogPotential(cir_potential, name='alpha*log(x)'),
                   STATE_SPACE_POSITIVE,
                   name=MODEL_CIR,
                   params=params._asdict())


def build_model(model_id, **params):
    """Model registry used by the command line."""
    if model_id == MODEL_GAUSSIAN_RW:
        return gaussian_rw_model()
    if model_id == MODEL_AR:
        return ar_model(params['alpha'])
    if model_id == MODEL_CIR:
        return cir_model(CirParams(
            theta=params['theta'],
            mu=params['mu'],
            sigma=params['sigma'],
            delta=params['delta'],
            alpha=params['alpha']))
    raise InvalidArgument(
        'Unknown model "{model}"; expected one of {known}.'.format(
            model=model_id,
            known=', '.join([MODEL_GAUSSIAN_RW, MODEL_AR, MODEL_CIR])))


def gaussian_rw_coefficients(n):
    """(log a_k, b_k) for k = 0..n with gamma_k(x) = a_k exp(-b_k x^2)."""
    if n < 0:
        raise InvalidArgument('n must be >= 0, got {n}.'.format(n=n))
    log_a = numpy.zeros(int(n) + 1)
    b = numpy.zeros(int(n) + 1)
    for k in range(int(n)):
        log_a[k + 1] = log_a[k] - 0.5 * numpy.log1p(2.0 * b[k])
        b[k + 1] = 1.0 + b[k] / (1.0 + 2.0 * b[k])
    return log_a, b


def gaussian_rw_gamma_oracle(x, n):
    """log gamma_{n,x}(1) for the Gaussian random walk, in closed form."""
    log_a, b = gaussian_rw_coefficients(n)
    x = numpy.asarray(x, dtype=float)
    result = log_a[-1] - b[-1] * x ** 2
    if result.ndim == 0:
        return float(result)
    return result


def cir_transition_sample(params, x, generator):
    x = numpy.asarray(x, dtype=float)
    if numpy.any(x <= 0):
        raise InvalidArgument(
            'CIR transitions start from x > 0, got {x}.'.format(
                x=x[x <= 0][0] if x.ndim else x))
    return CirKernel(params).sample(x, generator)


def cir_v_function(params, s):
    """V(x) = 1 + 4 theta s x / (sigma^2 (1 - e^{-theta delta}))."""
    return LinearV(2.0 * params.c_delta * s, 1.0)


def cir_exp_v_closed_form(params, s, x):
    """log M(e^V)(x) for the CIR skeleton and V = cir_v_function(s)."""
    if not 0 < s < 0.5:
        raise InvalidArgument(
            'The CIR drift parameter needs s in (0, 1/2), got {s}.'.format(
                s=s))
    params = params.validate()
    value = _cir_log_mgf(params, s, x) + 1.0
    if numpy.ndim(value) == 0:
        return float(value)
    return value


def cir_geometric_mean(record, params):
    """E_x[prod_k X_k^{1/n}] estimate carried by a CIR run with alpha = 1/n.

    With U(x) = alpha log x and alpha n = 1, gamma_{n,x}(1) is the expected
    geometric mean of X_0, ..., X_{n-1}.
    """
    if record.n == 0 or not numpy.isclose(params.alpha * record.n, 1.0):
        raise InvalidArgument(
            'Geometric mean reading needs alpha = 1/n, got alpha={alpha} and '
            'n={n}.'.format(alpha=params.alpha, n=record.n))
    return float(numpy.exp(record.log_gamma))


def default_oracle_grid(model, x0_list):
    """(lower, upper, points) of the oracle grid used when none is given.

    AR: [-12, 12] widened to x0 +- 6, step 0.01.
    CIR: from half the smallest of x0 and mu to 12 one-step standard
    deviations above the largest; the spacing is half the one-step
    standard deviation at the lower bound.
    """
    if model.name == MODEL_AR:
        lower = min(-AR_GRID_HALF_WIDTH, min(x0_list) - AR_GRID_MARGIN)
        upper = max(AR_GRID_HALF_WIDTH, max(x0_list) + AR_GRID_MARGIN)
        step = AR_GRID_STEP
    elif model.name == MODEL_CIR:
        params = CirParams(**model.params)
        low = min(min(x0_list), params.mu)
        high = max(max(x0_list), params.mu)
        if low <= 0:
            raise InvalidArgument(
                'CIR starting states must be > 0, got {low}.'.format(low=low))
        lower = low / 2.0
        upper = high + DEFAULT_BAND_WIDTH * params.sigma * numpy.sqrt(
            high * params.delta)
        step = CIR_GRID_SPACING * params.sigma * numpy.sqrt(
            lower * params.delta)
    else:
        raise InvalidArgument(
            'Model {name} has no default oracle grid.'.format(
                name=model.name))
    points = int(numpy.ceil((upper - lower) / step - 1e-9)) + 1
    return float(lower), float(upper), points


def gamma_oracle(model, x0_list, n_list, lower=None, upper=None,
                 points=None, rule=None, band=None):
    """log gamma_{n,x0}(1) for every (x0, n) of a plan.

    Closed form for the Gaussian random walk, grid quadrature otherwise;
    without a grid the `default_oracle_grid` is used.
    :returns: (dict keyed by (x0, n), truncation deficit or None)
    """
    if model.name == MODEL_GAUSSIAN_RW:
        oracle = {}
        for n in n_list:
            for x0 in x0_list:
                oracle[(float(x0), int(n))] = gaussian_rw_gamma_oracle(x0, n)
        return oracle, None
    if (lower, upper, points) == (None, None, None):
        lower, upper, points = default_oracle_grid(model, x0_list)
    elif None in (lower, upper, points):
        raise InvalidArgument(
            'Model {name} needs all of the grid bounds and the point count '
            'for its oracle, or none of them.'.format(name=model.name))
    if band is None and model.name == MODEL_CIR:
        band = DEFAULT_BAND_WIDTH
    kwargs = {'band': band}
    if rule:
        kwargs['rule'] = rule
    oracle, finite = grid_gamma_oracle(model, x0_list, n_list, lower, upper,
                                       points, **kwargs)
    logger('models').info(
        'Grid oracle for {name}: {cells} cells, mass deficit '
        '{deficit:.3g}.'.format(name=model.name, cells=len(oracle),
                                deficit=finite.metadata['mass_deficit']))
    return oracle, finite.metadata['mass_deficit']
