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

"""Feynman-Kac models and exact evaluation of Q_n(phi)(x).

A model pairs a Markov kernel M with a log-potential U and defines the
non-negative kernel Q(x, dy) = exp(U(x)) M(x, dy). Finite models carry Q as
an explicit matrix; continuous models are turned into finite ones by
quadrature on a uniform grid.
"""

# Stdlib imports
import warnings

# Third party imports
import numpy
from scipy import sparse
from scipy.special import logsumexp

# This package imports
from .constants import (
    ROW_MASS_ULPS,
    DENSE_STATE_GUARD,
    QUADRATURE_RULES,
    QUADRATURE_SIMPSON,
    STATE_SPACE_FINITE,
    STATE_SPACE_POSITIVE,
    QUADRATURE_TRAPEZOID,
    TRUNCATION_MASS_FLOOR,
)
from .exceptions import (
    TooLarge,
    Unsupported,
    InvalidArgument,
    TruncationWarning,
)
from .utils import logger

# exp() of anything outside this window is not a normal double
LOG_DOUBLE_MAX = numpy.log(numpy.finfo(float).max)
LOG_DOUBLE_MIN = numpy.log(numpy.finfo(float).tiny)


def _frozen(array):
    array = numpy.array(array, dtype=float)
    array.flags.writeable = False
    return array


class LogPotential(object):
    """U(x), evaluated elementwise on arrays of states."""

    def __init__(self, func, name=None):
        self._func = func
        self.name = name or getattr(func, '__name__', 'U')

    def __call__(self, x):
        return numpy.asarray(self._func(numpy.asarray(x, dtype=float)),
                             dtype=float)

    def positive_part(self, x):
        return numpy.maximum(self(x), 0.0)

    def __repr__(self):
        return 'LogPotential({0})'.format(self.name)


class MarkovKernel(object):
    """Transition kernel M.

    Subclasses implement `sample`; the density, conditional moments and the
    closed-form log M(e^V)(x) are optional and raise `Unsupported` when
    absent.
    """

    name = 'kernel'
    has_density = False

    def sample(self, states, generator):
        raise NotImplementedError

    def log_density(self, x, y):
        raise Unsupported(
            'Kernel {name} has no transition density.'.format(name=self.name))

    def density(self, x, y):
        return numpy.exp(self.log_density(x, y))

    def moments(self, x):
        raise Unsupported(
            'Kernel {name} does not expose conditional moments.'.format(
                name=self.name))

    def log_exp_v_integral(self, x, v_fn):
        raise Unsupported(
            'Kernel {name} has no closed form for M(e^V) with {v}.'.format(
                name=self.name, v=v_fn))


class FKModel(object):
    """A Markov kernel paired with a log-potential."""

    def __init__(self, kernel, potential, state_space, name=None,
                 params=None):
        self.kernel = kernel
        self.potential = potential
        self.state_space = state_space
        self.name = name or kernel.name
        self.params = params

    def validate_states(self, states):
        states = numpy.asarray(states, dtype=float)
        if self.state_space == STATE_SPACE_POSITIVE and numpy.any(
                states <= 0):
            raise InvalidArgument(
                'Model {name} lives on the positive half-line, got a state '
                '<= 0.'.format(name=self.name))
        return states

    def __repr__(self):
        return 'FKModel({name})'.format(name=self.name)


class FiniteKernel(MarkovKernel):
    """Row-normalized Q of a finite model, sampled by inverse CDF."""

    name = 'finite'
    has_density = True

    def __init__(self, transition):
        self.transition = transition
        cdf = numpy.cumsum(transition, axis=1)
        cdf[:, -1] = 1.0
        self._cdf = cdf

    def sample(self, states, generator):
        states = numpy.asarray(states, dtype=int)
        u = generator.random(states.shape[0])
        picked = (self._cdf[states] <= u[:, None]).sum(axis=1)
        return numpy.minimum(picked, self.transition.shape[0] - 1)

    def density(self, x, y):
        return self.transition[numpy.asarray(x, dtype=int),
                               numpy.asarray(y, dtype=int)]

    def log_density(self, x, y):
        with numpy.errstate(divide='ignore'):
            return numpy.log(self.density(x, y))


class FiniteModel(object):
    """Explicit non-negative Q on a finite, ordered label set.

    `q_matrix` is either a dense array or a scipy CSR matrix (banded grid
    discretizations). Instances are read-only.
    """

    def __init__(self, q_matrix, labels=None, v_weights=None, metadata=None,
                 strict=True):
        if sparse.issparse(q_matrix):
            q_matrix = sparse.csr_matrix(q_matrix, dtype=float)
            q_matrix.sort_indices()
            entries = q_matrix.data
        else:
            q_matrix = _frozen(q_matrix)
            entries = q_matrix
        if q_matrix.ndim != 2 or q_matrix.shape[0] != q_matrix.shape[1]:
            raise InvalidArgument(
                'q_matrix must be square, got shape {shape}.'.format(
                    shape=q_matrix.shape))
        size = q_matrix.shape[0]
        if size == 0:
            raise InvalidArgument('q_matrix must have at least one state.')
        if not numpy.all(numpy.isfinite(entries)):
            raise InvalidArgument('q_matrix entries must be finite.')
        if numpy.any(entries < 0):
            raise InvalidArgument('q_matrix entries must be >= 0.')

        row_mass = numpy.asarray(q_matrix.sum(axis=1), dtype=float).ravel()
        # a decimal stochastic row can sum to 1 - ulp
        row_mass[numpy.abs(row_mass - 1.0) <=
                 ROW_MASS_ULPS * size * numpy.finfo(float).eps] = 1.0
        if strict and numpy.any(row_mass <= 0):
            raise InvalidArgument(
                'q_matrix rows {rows} have no positive entry.'.format(
                    rows=numpy.flatnonzero(row_mass <= 0).tolist()))

        if labels is None:
            labels = list(range(size))
        labels = list(labels)
        if len(labels) != size:
            raise InvalidArgument(
                'Got {count} labels for {size} states.'.format(
                    count=len(labels), size=size))
        if v_weights is not None:
            v_weights = _frozen(v_weights)
            if v_weights.shape != (size,):
                raise InvalidArgument(
                    'v_weights must have one value per state.')
            if numpy.any(v_weights < 1):
                raise InvalidArgument('v_weights must be >= 1 (v = e^V).')

        self.q_matrix = q_matrix
        self.labels = labels
        self.v_weights = v_weights
        self.metadata = dict(metadata or {})
        self.row_mass = _frozen(row_mass)
        self._support = None

    @classmethod
    def from_potential(cls, transition, log_potential, **kwargs):
        """Build Q = diag(e^U) M from a stochastic matrix and U."""
        transition = numpy.asarray(transition, dtype=float)
        weights = numpy.exp(numpy.asarray(log_potential, dtype=float))
        return cls(weights[:, None] * transition, **kwargs)

    @property
    def size(self):
        return self.q_matrix.shape[0]

    @property
    def has_constant_potential(self):
        return bool(numpy.all(self.row_mass == self.row_mass[0]))

    @property
    def is_sparse(self):
        return sparse.issparse(self.q_matrix)

    def dense(self, guard=DENSE_STATE_GUARD):
        if self.size > guard:
            raise TooLarge(
                'Dense operations are limited to {guard} states, model has '
                '{size}.'.format(guard=guard, size=self.size))
        if self.is_sparse:
            return _frozen(self.q_matrix.toarray())
        return self.q_matrix

    @property
    def log_potential(self):
        with numpy.errstate(divide='ignore'):
            return numpy.log(self.row_mass)

    @property
    def v(self):
        if self.v_weights is None:
            return numpy.ones(self.size)
        return self.v_weights

    def to_fk_model(self):
        """The same Q seen as selection by e^U followed by mutation by M."""
        q = self.dense()
        transition = q / self.row_mass[:, None]
        potential = self.log_potential
        labels = numpy.arange(self.size)

        def finite_potential(states):
            return potential[numpy.asarray(states, dtype=int)]

        model = FKModel(FiniteKernel(transition),
                        LogPotential(finite_potential, name='log row mass'),
                        STATE_SPACE_FINITE,
                        name=self.metadata.get('name', 'finite'))
        model.labels = labels
        return model

    def __repr__(self):
        return 'FiniteModel(size={size}, sparse={sparse})'.format(
            size=self.size, sparse=self.is_sparse)


def as_finite_model(model, strict=True):
    if isinstance(model, FiniteModel):
        return model
    return FiniteModel(model, strict=strict)


def _check_phi(model, phi):
    phi = numpy.asarray(phi, dtype=float)
    if phi.shape != (model.size,):
        raise InvalidArgument(
            'phi has {length} values, model has {size} states.'.format(
                length=phi.size, size=model.size))
    return phi


def _check_index(model, x_index):
    if not 0 <= int(x_index) < model.size:
        raise InvalidArgument(
            'State index {index} outside [0, {size}).'.format(
                index=x_index, size=model.size))
    return int(x_index)


def q_apply(model, phi):
    """Q(phi)(x_i) = sum_j q[i, j] phi[j]."""
    model = as_finite_model(model)
    phi = _check_phi(model, phi)
    return numpy.asarray(model.q_matrix.dot(phi), dtype=float).ravel()


def to_signed_log(values):
    values = numpy.asarray(values, dtype=float)
    with numpy.errstate(divide='ignore'):
        return numpy.sign(values), numpy.log(numpy.abs(values))


def _log_step_dense(q, signs, logs):
    support = q > 0
    shifted = numpy.where(support, logs[None, :], -numpy.inf)
    row_max = shifted.max(axis=1)
    finite = numpy.isfinite(row_max)
    row_max = numpy.where(finite, row_max, 0.0)
    with numpy.errstate(invalid='ignore'):
        scaled = numpy.exp(shifted - row_max[:, None])
    totals = (q * scaled * signs[None, :]).sum(axis=1)
    return _combine(totals, row_max)


def _log_step_sparse(q, signs, logs):
    starts = q.indptr[:-1]
    rows = numpy.repeat(numpy.arange(q.shape[0]), numpy.diff(q.indptr))
    gathered = logs[q.indices]
    row_max = numpy.maximum.reduceat(gathered, starts)
    row_max = numpy.where(numpy.isfinite(row_max), row_max, 0.0)
    with numpy.errstate(invalid='ignore'):
        scaled = numpy.exp(gathered - row_max[rows])
    totals = numpy.add.reduceat(q.data * scaled * signs[q.indices], starts)
    return _combine(totals, row_max)


def _combine(totals, row_max):
    with numpy.errstate(divide='ignore'):
        logs = numpy.log(numpy.abs(totals)) + row_max
    signs = numpy.sign(totals)
    logs[signs == 0] = -numpy.inf
    return signs, logs


def log_step(model, signs, logs):
    """One application of Q to a function given as (sign, log|value|).

    Each row is shifted by the largest log value on its support. A
    constant function c maps to c times the row mass, so U = 0 keeps
    log 1 = 0 exact.
    """
    if signs.size and signs[0] != 0 and numpy.all(signs == signs[0]) \
            and numpy.all(logs == logs[0]):
        with numpy.errstate(divide='ignore'):
            mass_logs = numpy.log(model.row_mass)
        return (numpy.where(model.row_mass > 0, signs[0], 0.0),
                mass_logs + logs[0])
    if model.is_sparse:
        return _log_step_sparse(model.q_matrix, signs, logs)
    return _log_step_dense(model.q_matrix, signs, logs)


def iterate_log(model, n, phi):
    """(sign, log|Q^n phi|) for every state."""
    model = as_finite_model(model)
    phi = _check_phi(model, phi)
    if n < 0:
        raise InvalidArgument('n must be >= 0, got {n}.'.format(n=n))
    signs, logs = to_signed_log(phi)
    for _ in range(int(n)):
        signs, logs = log_step(model, signs, logs)
    return signs, logs


def log_gamma_exact_finite(model, x_index, n, phi):
    """Signed log of gamma_{n,x}(phi) = Q^n(phi)(x)."""
    model = as_finite_model(model)
    x_index = _check_index(model, x_index)
    signs, logs = iterate_log(model, n, phi)
    return signs[x_index], logs[x_index]


def _linear_step(model, vector):
    """Q vector, or None once a value leaves the normal double range."""
    if numpy.all(vector == vector[0]):
        image = model.row_mass * vector[0]
    else:
        image = numpy.asarray(model.q_matrix.dot(vector), dtype=float).ravel()
    magnitude = numpy.abs(image[image != 0])
    if not numpy.all(numpy.isfinite(image)) or numpy.any(
            magnitude < numpy.finfo(float).tiny):
        return None
    return image


def gamma_exact_finite(model, x_index, n, phi):
    """gamma_{n,x}(phi) = Q^n(phi)(x); Q_0 is the identity.

    Iterated on doubles while every value stays normal, in log space
    otherwise; raises `InvalidArgument` if the result cannot be represented
    as a double instead of returning inf or 0.
    """
    model = as_finite_model(model)
    x_index = _check_index(model, x_index)
    vector = _check_phi(model, phi)
    if n < 0:
        raise InvalidArgument('n must be >= 0, got {n}.'.format(n=n))
    for _ in range(int(n)):
        vector = _linear_step(model, vector)
        if vector is None:
            break
    else:
        return float(vector[x_index])
    sign, log_value = log_gamma_exact_finite(model, x_index, n, phi)
    if sign == 0:
        return 0.0
    if log_value > LOG_DOUBLE_MAX or log_value < LOG_DOUBLE_MIN:
        raise InvalidArgument(
            'gamma = {sign:+.0f} * exp({log:.6g}) is outside double range; '
            'use log_gamma_exact_finite.'.format(sign=sign, log=log_value))
    return float(sign * numpy.exp(log_value))


def quadrature_weights(grid, rule=QUADRATURE_TRAPEZOID):
    count = grid.size
    step = grid[1] - grid[0]
    if rule == QUADRATURE_TRAPEZOID:
        weights = numpy.full(count, step)
        weights[[0, -1]] = step / 2.0
    elif rule == QUADRATURE_SIMPSON:
        if count % 2 == 0:
            raise InvalidArgument(
                'Simpson quadrature needs an odd point count, got '
                '{count}.'.format(count=count))
        weights = numpy.full(count, 2.0)
        weights[1::2] = 4.0
        weights[[0, -1]] = 1.0
        weights *= step / 3.0
    else:
        raise InvalidArgument(
            'Unknown quadrature rule {rule}; expected one of {rules}.'.format(
                rule=rule, rules=', '.join(QUADRATURE_RULES)))
    return weights


def make_grid(model, lower, upper, points):
    if not lower < upper:
        raise InvalidArgument(
            'Grid needs lower < upper, got [{lower}, {upper}].'.format(
                lower=lower, upper=upper))
    if int(points) < 2:
        raise InvalidArgument(
            'Grid needs at least 2 points, got {points}.'.format(
                points=points))
    if model.state_space == STATE_SPACE_POSITIVE and lower <= 0:
        raise InvalidArgument(
            'Model {name} lives on the positive half-line; grid lower bound '
            'must be > 0.'.format(name=model.name))
    return numpy.linspace(float(lower), float(upper), int(points))


def _band_columns(model, grid, band):
    mean, std = model.kernel.moments(grid)
    mean = numpy.broadcast_to(mean, grid.shape)
    std = numpy.broadcast_to(std, grid.shape)
    lo = numpy.searchsorted(grid, mean - band * std, side='left')
    hi = numpy.searchsorted(grid, mean + band * std, side='right')
    # keep the node nearest the conditional mean in every row
    nearest = numpy.clip(numpy.searchsorted(grid, mean), 0, grid.size - 1)
    lo = numpy.minimum(lo, nearest)
    hi = numpy.maximum(hi, nearest + 1)
    counts = hi - lo
    indptr = numpy.concatenate([[0], numpy.cumsum(counts)])
    rows = numpy.repeat(numpy.arange(grid.size), counts)
    cols = lo[rows] + numpy.arange(indptr[-1]) - indptr[:-1][rows]
    return rows, cols, indptr


def discretize(model, lower, upper, points, rule=QUADRATURE_TRAPEZOID,
               band=None):
    """Quadrature truncation of Q onto a uniform grid.

    q[i, j] = exp(U(x_i)) density(x_i, x_j) w_j. The U=0 row masses are kept
    in `metadata['row_mass']`; rows losing more than 1 - 0.999 of their mass
    are listed in `metadata['truncated_states']` and raise a
    `TruncationWarning`.

    :param band: when given, only nodes within `band` conditional standard
        deviations of the conditional mean are kept and the result is a
        sparse banded matrix.
    """
    if not model.kernel.has_density:
        raise Unsupported(
            'Model {name} has no transition density; it cannot be '
            'discretized.'.format(name=model.name))
    grid = make_grid(model, lower, upper, points)
    weights = quadrature_weights(grid, rule)
    log_weight = model.potential(grid)

    if band is None:
        density = model.kernel.density(grid[:, None], grid[None, :])
        mass_terms = density * weights[None, :]
        row_mass = mass_terms.sum(axis=1)
        q_matrix = numpy.exp(log_weight)[:, None] * mass_terms
    else:
        rows, cols, indptr = _band_columns(model, grid, float(band))
        mass_terms = model.kernel.density(grid[rows], grid[cols]) * \
            weights[cols]
        row_mass = numpy.bincount(rows, weights=mass_terms,
                                  minlength=grid.size)
        q_matrix = sparse.csr_matrix(
            (numpy.exp(log_weight)[rows] * mass_terms, cols, indptr),
            shape=(grid.size, grid.size))

    truncated = numpy.flatnonzero(row_mass < TRUNCATION_MASS_FLOOR)
    metadata = {
        'name': model.name,
        'grid': grid,
        'weights': weights,
        'rule': rule,
        'band': band,
        'row_mass': row_mass,
        'mass_deficit': float(max(0.0, 1.0 - row_mass.min())),
        'truncated_states': grid[truncated],
    }
    logger('core').info(
        'Discretized {name} on [{lower}, {upper}] with {points} points '
        '({rule}{band}); minimal U=0 row mass {mass:.8f}.'.format(
            name=model.name, lower=lower, upper=upper, points=points,
            rule=rule, mass=row_mass.min(),
            band='' if band is None else ', band {0}'.format(band)))
    if truncated.size:
        warnings.warn(
            '{count} grid states of {name} keep less than {floor} of their '
            'kernel mass (worst {mass:.6g} at x={state:.6g}).'.format(
                count=truncated.size, name=model.name,
                floor=TRUNCATION_MASS_FLOOR, mass=row_mass.min(),
                state=grid[numpy.argmin(row_mass)]),
            TruncationWarning, stacklevel=2)
    return FiniteModel(q_matrix, labels=grid, metadata=metadata)


def grid_gamma_oracle(model, x0_list, n_list, lower, upper, points,
                      rule=QUADRATURE_TRAPEZOID, band=None):
    """log gamma_{n,x0}(1) for a continuous model by grid quadrature.

    The first transition is integrated from x0 itself, so x0 need not be a
    grid node: gamma_n(x0) = e^{U(x0)} sum_j density(x0, x_j) w_j
    gamma_{n-1}(x_j).

    :returns: (dict keyed by (x0, n), discretized FiniteModel)
    """
    finite = discretize(model, lower, upper, points, rule=rule, band=band)
    grid = finite.metadata['grid']
    log_w = numpy.log(finite.metadata['weights'])
    x0_values = model.validate_states(x0_list)
    horizons = sorted(set(int(n) for n in n_list))
    if horizons and horizons[0] < 0:
        raise InvalidArgument('Horizons must be >= 0.')

    log_u0 = model.potential(x0_values)
    log_density = numpy.array([model.kernel.log_density(x0, grid)
                               for x0 in x0_values])
    oracle = {}
    signs = numpy.ones(finite.size)
    logs = numpy.zeros(finite.size)
    done = 0
    for n in horizons:
        if n == 0:
            for x0 in x0_values:
                oracle[(float(x0), 0)] = 0.0
            continue
        while done < n - 1:
            signs, logs = log_step(finite, signs, logs)
            done += 1
        terms = log_density + log_w[None, :] + logs[None, :]
        values = log_u0 + logsumexp(terms, axis=1)
        for x0, value in zip(x0_values, values):
            oracle[(float(x0), n)] = float(value)
    return oracle, finite
