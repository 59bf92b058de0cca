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

"""Selection-mutation particle system and its unbiased estimate of gamma.

Every generation selects N ancestors with probabilities proportional to
e^{U} (multinomial, inverse CDF with one uniform per particle) and moves
them through the model kernel. log eta_k^N(e^U) is recorded per step.
"""

# Stdlib imports
import math
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

# Third party imports
import numpy

# This package imports
from .constants import GOLDEN_GAMMA, UINT64_MASK
from .exceptions import ExtinctionError, InvalidArgument
from .utils import logger

Ensemble = namedtuple('Ensemble', ['positions', 'n'])
RunRecord = namedtuple('RunRecord',
                       ['log_mean_weights', 'log_gamma', 'n', 'N', 'seed'])
SeedSpec = namedtuple('SeedSpec', ['master_seed', 'replicate_index'])
SignedLog = namedtuple('SignedLog', ['sign', 'log_abs'])


def splitmix64(value):
    z = (int(value) + GOLDEN_GAMMA) & UINT64_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & UINT64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & UINT64_MASK
    return z ^ (z >> 31)


def derive_seed(seed):
    """64-bit stream seed, a pure function of (master_seed, replicate)."""
    if seed.replicate_index < 0:
        raise InvalidArgument(
            'replicate_index must be >= 0, got {index}.'.format(
                index=seed.replicate_index))
    mixed = (int(seed.master_seed) & UINT64_MASK) ^ \
        ((int(seed.replicate_index) * GOLDEN_GAMMA) & UINT64_MASK)
    return splitmix64(mixed)


def make_generator(seed):
    return numpy.random.Generator(numpy.random.PCG64(derive_seed(seed)))


def init_ensemble(x0, N):
    if int(N) != N or N < 1:
        raise InvalidArgument(
            'Population size N must be an integer >= 1, got {N}.'.format(N=N))
    return Ensemble(positions=numpy.full(int(N), x0), n=0)


def shifted_weights(positions, model):
    """(max_i U(x_i), e^{U(x_i) - max}) over the ensemble."""
    log_w = model.potential(positions)
    top = numpy.max(log_w)
    if top == -numpy.inf:
        raise ExtinctionError('Every particle has weight exp(-inf) = 0.')
    if numpy.isnan(top) or top == numpy.inf:
        raise InvalidArgument(
            'Log-potential returned {value} for some particle.'.format(
                value=top))
    return top, numpy.exp(log_w - top)


def log_mean_weight(positions, model):
    """log eta^N(e^U) = logsumexp_i U(x_i) - log N."""
    top, weights = shifted_weights(positions, model)
    return _log_mean(top, weights)


def _log_mean(top, weights):
    return top + (math.log(weights.sum()) - math.log(weights.size))


def select(weights, generator):
    """Ancestor indices by inverse CDF; zero weights are never picked."""
    cdf = numpy.cumsum(weights)
    uniforms = generator.random(weights.size) * cdf[-1]
    picked = numpy.searchsorted(cdf, uniforms, side='right')
    return numpy.minimum(picked, weights.size - 1)


def step(ensemble, model, generator):
    """One selection-mutation transition.

    :returns: (next Ensemble, log eta_n^N(e^U) of the current one)
    """
    positions = ensemble.positions
    top, weights = shifted_weights(positions, model)
    value = _log_mean(top, weights)
    ancestors = select(weights, generator)
    moved = model.kernel.sample(positions[ancestors], generator)
    return Ensemble(positions=moved, n=ensemble.n + 1), value


def simulate(model, x0, n, N, seed):
    """Run the particle system for n steps.

    :returns: (RunRecord, final Ensemble)
    """
    if n < 0:
        raise InvalidArgument('Horizon n must be >= 0, got {n}.'.format(n=n))
    if hasattr(model, 'validate_states'):
        model.validate_states([x0])
    generator = make_generator(seed)
    ensemble = init_ensemble(x0, N)
    values = []
    for k in range(int(n)):
        try:
            ensemble, value = step(ensemble, model, generator)
        except ExtinctionError as e:
            raise ExtinctionError(
                'Particle system died at step {k}: {error}'.format(
                    k=k, error=e), step=k)
        values.append(value)
    record = RunRecord(log_mean_weights=tuple(values),
                       log_gamma=math.fsum(values),
                       n=int(n),
                       N=int(N),
                       seed=seed)
    return record, ensemble


def run(model, x0, n, N, seed):
    return simulate(model, x0, n, N, seed)[0]


def estimate_gamma_phi(record, final_ensemble, phi):
    """Signed log of gamma^N_n(phi) = prod_k eta_k^N(e^U) eta_n^N(phi).

    phi is a callable on states, a per-state vector indexed by finite
    states, or a constant.
    """
    positions = final_ensemble.positions
    if callable(phi):
        values = numpy.asarray(phi(positions), dtype=float)
    elif numpy.ndim(phi) == 0:
        values = numpy.full(positions.shape, float(phi))
    else:
        values = numpy.asarray(phi, dtype=float)[positions.astype(int)]
    mean = values.mean()
    if mean == 0:
        return SignedLog(0.0, -numpy.inf)
    return SignedLog(float(numpy.sign(mean)),
                     record.log_gamma + math.log(abs(mean)))


def run_replicates(model, x0, n, N, master_seed, indices, threads=None):
    """One RunRecord or ExtinctionError per replicate index, in index order.

    Each replicate draws from its own stream, so the output does not depend
    on the number of threads.
    """
    def one(index):
        try:
            return run(model, x0, n, N, SeedSpec(master_seed, index))
        except ExtinctionError as e:
            logger('engine').debug(
                'Replicate {index} from x0={x0}: {error}'.format(
                    index=index, x0=x0, error=e))
            return e

    indices = list(indices)
    if threads == 1 or len(indices) < 2:
        return [one(index) for index in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, indices))
