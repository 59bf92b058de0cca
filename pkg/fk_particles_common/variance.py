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

"""Relative variance of the particle estimate of gamma_{n,x}(1).

Three routes are provided: Monte Carlo over seeded replicates, the exact
coalescent expansion on finite models, and brute-force enumeration of every
trajectory of a tiny particle system. The last two are each other's oracle.
"""

# Stdlib imports
import math
import functools
import itertools
from collections import namedtuple

# Third party imports
import numpy

# This package imports
from .core import FiniteModel, log_gamma_exact_finite
from .engine import run_replicates
from .constants import (
    Z_SCORE_FLAG,
    TENSOR_STATE_GUARD,
    LOG_RATIO_SATURATION,
    BRUTE_FORCE_BITS_GUARD,
    COALESCENT_HORIZON_GUARD,
)
from .exceptions import TooLarge, ExtinctionError, InvalidArgument
from .utils import logger, linear_fit

ExperimentPlan = namedtuple('ExperimentPlan',
                            ['model', 'x0_list', 'n_list', 'N', 'R',
                             'master_seed'])
CoalescentConfig = namedtuple('CoalescentConfig', ['indices', 'n'])
VarianceRow = namedtuple('VarianceRow',
                         ['model', 'x0', 'n', 'N', 'R', 'rel_var', 'std_err',
                          'log_gamma_oracle', 'failures'])
UnbiasedRow = namedtuple('UnbiasedRow',
                         ['model', 'x0', 'n', 'N', 'R', 'mean_ratio',
                          'std_err', 'z', 'flagged', 'exact'])
GrowthFit = namedtuple('GrowthFit', ['x0', 'slope', 'intercept',
                                     'r_squared'])


def experiment_plan(model, x0_list, n_list, N, R, master_seed):
    if int(R) < 2:
        raise InvalidArgument(
            'An experiment needs R >= 2 replicates, got {R}.'.format(R=R))
    if int(N) < 1:
        raise InvalidArgument('N must be >= 1, got {N}.'.format(N=N))
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 0:
        raise InvalidArgument('Horizons must be a non-empty list of n >= 0.')
    if not list(x0_list):
        raise InvalidArgument('x0 list must not be empty.')
    return ExperimentPlan(model, list(x0_list), n_list, int(N), int(R),
                          int(master_seed))


def coalescent_config(indices, n):
    indices = tuple(int(i) for i in indices)
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise InvalidArgument(
            'Coalescent indices must increase strictly, got {indices}.'.format(
                indices=indices))
    if indices and (indices[0] < 0 or indices[-1] > n):
        raise InvalidArgument(
            'Coalescent indices must lie in [0, {n}], got {indices}.'.format(
                n=n, indices=indices))
    return CoalescentConfig(indices, int(n))


def coalescent_configs(n):
    """Every non-empty configuration over {0..n}, in binary counter order."""
    for counter in range(1, 2 ** (n + 1)):
        yield CoalescentConfig(
            tuple(i for i in range(n + 1) if counter >> i & 1), n)


def config_weight(n, N, s):
    """(1 - 1/N)^{(n+1)-s} N^{-s}."""
    return (1.0 - 1.0 / N) ** (n + 1 - s) * float(N) ** (-s)


def product_identity_check(a):
    """(sum over non-empty subsets of prod a_j, prod (1 + a_j) - 1)."""
    a = [float(value) for value in a]
    subsets = math.fsum(
        float(numpy.prod([a[i] for i in config.indices]))
        for config in coalescent_configs(len(a) - 1))
    return subsets, float(numpy.prod([1.0 + value for value in a]) - 1.0)


def _scaled_q(model, guard):
    if model.size > guard:
        raise TooLarge(
            'Exact variance routines are limited to {guard} states, model '
            'has {size}.'.format(guard=guard, size=model.size))
    q = numpy.array(model.dense(), dtype=float)
    # Gamma-bar is invariant under Q -> Q / c
    return q / model.row_mass.max()


def gamma_bar_config(model, x_index, config):
    """Gamma-bar^{(i_1..i_s)}_{n,x}(1 (x) 1) on the |X| x |X| tensor space.

    F(y, y') is held as a matrix: Q^{(x)2} F = Q F Q^T and
    D(F)(y, y') = F(y, y).
    """
    q = _scaled_q(model, TENSOR_STATE_GUARD)
    n = config.n

    def tensor_power(F, k):
        for _ in range(k):
            F = q.dot(F).dot(q.T)
        return F

    def coalesce(F):
        return numpy.repeat(numpy.diag(F)[:, None], F.shape[1], axis=1)

    F = numpy.ones_like(q)
    bounds = list(config.indices) + [n]
    if not config.indices:
        F = tensor_power(F, n)
    else:
        F = tensor_power(F, n - config.indices[-1])
        for lower, upper in reversed(list(zip(bounds[:-2], bounds[1:-1]))):
            F = tensor_power(coalesce(F), upper - lower)
        F = tensor_power(coalesce(F), config.indices[0])
    gamma = numpy.linalg.matrix_power(q, n).sum(axis=1)[x_index]
    return float(F[x_index, x_index] / gamma ** 2)


def _apply(q, vector, k):
    for _ in range(k):
        vector = q.dot(vector)
    return vector


def coalescent_exact_variance(model, x_index, n, N):
    """Sum over s of config_weight(n, N, s) sum_{I_{n,s}} [Gamma-bar - 1].

    Configurations are walked from their largest index down; with
    F = f (x) 1 after each D, one configuration costs one extension
    f' = (Q^k f)(Q^k 1) of its parent.
    A constant row mass makes gamma^N deterministic and the result 0.
    """
    if n > COALESCENT_HORIZON_GUARD:
        raise TooLarge(
            'Coalescent enumeration is limited to n <= {guard} (2^(n+1) '
            'configurations), got n={n}.'.format(
                guard=COALESCENT_HORIZON_GUARD, n=n))
    if int(N) < 1 or n < 0:
        raise InvalidArgument('Need N >= 1 and n >= 0.')
    if model.has_constant_potential:
        return 0.0
    q = _scaled_q(model, TENSOR_STATE_GUARD)
    ones = numpy.ones(model.size)
    row = numpy.zeros(model.size)
    row[x_index] = 1.0
    # rows[k] = e_x^T Q^k, masses[k] = Q^k 1
    rows, masses = [row], [ones]
    for _ in range(n):
        rows.append(rows[-1].dot(q))
        masses.append(q.dot(masses[-1]))
    gamma = rows[n].dot(ones)
    brackets = [[] for _ in range(n + 2)]

    def visit(lowest, f, size):
        value = rows[lowest].dot(f) * rows[lowest].dot(ones) / gamma ** 2
        brackets[size].append(value - 1.0)
        for index in range(lowest - 1, -1, -1):
            gap = lowest - index
            visit(index, _apply(q, f, gap) * masses[gap], size + 1)

    for top in range(n, -1, -1):
        visit(top, masses[n - top] ** 2, 1)
    total = math.fsum(config_weight(n, N, s) * math.fsum(brackets[s])
                      for s in range(1, n + 2))
    logger('variance').debug(
        'Coalescent expansion at x={x}, n={n}, N={N}: {value:.12g}.'.format(
            x=x_index, n=n, N=N, value=total))
    return max(total, 0.0)


def brute_force_variance(model, x_index, n, N):
    """E[(gamma^N / gamma - 1)^2] by enumerating every particle trajectory.

    gamma^N_n(1) only depends on generations 0..n-1, so n-1 transitions
    are enumerated.
    """
    bits = N * (n + 1) * math.log2(model.size) if model.size > 1 else 0.0
    if bits > BRUTE_FORCE_BITS_GUARD:
        raise TooLarge(
            'Brute-force enumeration needs N(n+1)log2|X| <= {guard}, got '
            '{bits:.4g}.'.format(guard=BRUTE_FORCE_BITS_GUARD, bits=bits))
    if int(N) < 1 or n < 0:
        raise InvalidArgument('Need N >= 1 and n >= 0.')
    if n == 0 or model.has_constant_potential:
        return 0.0
    q = _scaled_q(model, TENSOR_STATE_GUARD)
    mass = q.sum(axis=1)
    gamma = _apply(q, numpy.ones(model.size), n)[x_index]
    # rows of `tuples` follow itertools.product order, which is the C order
    # of the outer product in `children`
    tuples = numpy.array(
        list(itertools.product(range(model.size), repeat=N)), dtype=int)
    tuple_mass = mass[tuples].mean(axis=1)
    totals = {'moment': 0.0, 'probability': 0.0}

    def children(particles):
        law = q[particles].sum(axis=0) / mass[particles].sum()
        return functools.reduce(numpy.multiply.outer, [law] * N).ravel()

    def descend(index, probability, product, generation):
        product = product * tuple_mass[index]
        chances = children(tuples[index])
        if generation + 1 == n - 1:
            leaves = product * tuple_mass / gamma - 1.0
            totals['moment'] += probability * math.fsum(
                chances * leaves ** 2)
            totals['probability'] += probability * math.fsum(chances)
            return
        for nxt in numpy.flatnonzero(chances > 0):
            descend(nxt, probability * chances[nxt], product,
                    generation + 1)

    start = int(numpy.flatnonzero((tuples == x_index).all(axis=1))[0])
    if n == 1:
        totals['moment'] = (tuple_mass[start] / gamma - 1.0) ** 2
        totals['probability'] = 1.0
    else:
        descend(start, 1.0, 1.0, 0)
    if abs(totals['probability'] - 1.0) > 1e-12:
        raise InvalidArgument(
            'Trajectory probabilities sum to {total!r}, not 1.'.format(
                total=totals['probability']))
    return totals['moment']


def exact_oracle(model, x0_list, n_list):
    """log gamma_{n,x}(1) for every state index and horizon of a plan."""
    ones = numpy.ones(model.size)
    return dict(((int(x0), int(n)),
                 float(log_gamma_exact_finite(model, int(x0), n, ones)[1]))
                for x0 in x0_list for n in n_list)


def _replicate_log_gammas(plan, threads):
    """Per x0, the prefix sums log gamma^N_n of each replicate (or error)."""
    model = plan.model
    if isinstance(model, FiniteModel):
        model = model.to_fk_model()
    horizon = max(plan.n_list)
    results = []
    for position, x0 in enumerate(plan.x0_list):
        logger('variance').info(
            'Running {R} replicates of N={N} particles from x0={x0} to '
            'n={n}.'.format(R=plan.R, N=plan.N, x0=x0, n=horizon))
        indices = range(position * plan.R, (position + 1) * plan.R)
        records = run_replicates(model, x0, horizon, plan.N,
                                 plan.master_seed, indices, threads=threads)
        prefixes = []
        for record in records:
            if isinstance(record, ExtinctionError):
                prefixes.append(record)
                continue
            weights = list(record.log_mean_weights)
            prefixes.append(dict((n, math.fsum(weights[:n]))
                                 for n in plan.n_list))
        results.append(prefixes)
    return results


def _cell_deltas(prefixes, x0, n, oracle):
    if (x0, n) not in oracle:
        raise InvalidArgument(
            'Oracle has no value for x0={x0}, n={n}.'.format(x0=x0, n=n))
    target = oracle[(x0, n)]
    deltas, failures = [], 0
    for prefix in prefixes:
        if isinstance(prefix, ExtinctionError):
            failures += 1
            continue
        delta = prefix[n] - target
        if abs(delta) > LOG_RATIO_SATURATION:
            failures += 1
            continue
        deltas.append(delta)
    return target, numpy.array(deltas), failures


def jackknife_mean(values):
    """(mean, leave-one-out standard error)."""
    values = numpy.asarray(values, dtype=float)
    count = values.size
    mean = values.mean()
    if count < 2:
        return mean, numpy.nan
    leave_one_out = (values.sum() - values) / (count - 1)
    spread = numpy.sum((leave_one_out - leave_one_out.mean()) ** 2)
    return mean, math.sqrt((count - 1) / float(count) * spread)


def relative_variance_mc(plan, oracle, threads=None):
    """Monte Carlo estimate of E[(gamma^N / gamma - 1)^2] per cell."""
    name = getattr(plan.model, 'name', None) or \
        plan.model.metadata.get('name', 'finite')
    table = []
    for x0, prefixes in zip(plan.x0_list,
                            _replicate_log_gammas(plan, threads)):
        for n in plan.n_list:
            target, deltas, failures = _cell_deltas(prefixes, x0, n, oracle)
            if deltas.size:
                rel_var, std_err = jackknife_mean(numpy.expm1(deltas) ** 2)
            else:
                rel_var, std_err = numpy.nan, numpy.nan
            if failures:
                logger('variance').warning(
                    'Cell x0={x0}, n={n}: {count} failed replicates.'.format(
                        x0=x0, n=n, count=failures))
            table.append(VarianceRow(name, x0, n, plan.N, plan.R,
                                     float(rel_var), float(std_err), target,
                                     failures))
    return table


def unbiasedness_check(plan, oracle, threads=None):
    """z = (mean gamma^N / gamma - 1) / stderr per cell; |z| > 4 flagged."""
    name = getattr(plan.model, 'name', None) or \
        plan.model.metadata.get('name', 'finite')
    rows = []
    for x0, prefixes in zip(plan.x0_list,
                            _replicate_log_gammas(plan, threads)):
        for n in plan.n_list:
            _, deltas, failures = _cell_deltas(prefixes, x0, n, oracle)
            ratios = numpy.exp(deltas)
            mean = float(ratios.mean()) if ratios.size else numpy.nan
            std_err = float(ratios.std(ddof=1) / math.sqrt(ratios.size)) \
                if ratios.size > 1 else numpy.nan
            exact = std_err == 0 and mean == 1.0
            if exact:
                z = 0.0
            elif std_err == 0:
                z = math.copysign(numpy.inf, mean - 1.0)
            else:
                z = (mean - 1.0) / std_err
            flagged = bool(failures) or not abs(z) <= Z_SCORE_FLAG
            rows.append(UnbiasedRow(name, x0, n, plan.N, plan.R, mean,
                                    std_err, float(z), flagged, exact))
    return rows


def growth_summary(table):
    """Per x0 least-squares line of rel_var against n."""
    fits = []
    for x0 in sorted(set(row.x0 for row in table), key=float):
        rows = [row for row in table
                if row.x0 == x0 and numpy.isfinite(row.rel_var)]
        if len(rows) < 2:
            continue
        slope, intercept, r_squared = linear_fit(
            [row.n for row in rows], [row.rel_var for row in rows])
        fits.append(GrowthFit(x0, slope, intercept, r_squared))
    return fits
