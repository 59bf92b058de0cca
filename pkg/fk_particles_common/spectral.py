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
import math
from collections import namedtuple

# Third party imports
import numpy
import networkx
from scipy import linalg

# This package imports
from .core import as_finite_model
from .constants import (
    B0_CLAMP,
    MET_GAP_FLOOR,
    MET_RATE_SLACK,
    SPECTRAL_MAX_ITER,
    SPECTRAL_TOLERANCE,
    TWISTED_ROW_TOLERANCE,
)
from .exceptions import (
    DegenerateFit,
    InvalidArgument,
    NonConvergence,
    CertificateError,
    AmbiguousSpectrum,
)
from .utils import logger, linear_fit

SpectralTriple = namedtuple('SpectralTriple', ['eigenvalue', 'h0', 'mu0'])
MetFit = namedtuple('MetFit', ['B0', 'B1', 'residuals', 'intercept',
                               'r_squared', 'rate_bound', 'rate_ok'])
SmallSetCertificate = namedtuple('SmallSetCertificate',
                                 ['m0', 'epsilon', 'nu', 'c_mask'])
PhiThreshold = namedtuple('PhiThreshold', ['value', 'clamped', 'floored'])
RadiusBound = namedtuple('RadiusBound', ['lower', 'upper', 'holds'])

# relative slack on inequalities that are tight in exact arithmetic
ROUNDING_SLACK = 1e-12


def is_primitive(matrix):
    """Some power of the matrix is entrywise positive."""
    matrix = numpy.asarray(matrix)
    if numpy.all(matrix > 0):
        return True
    graph = networkx.from_numpy_array((matrix > 0).astype(int),
                                      create_using=networkx.DiGraph)
    if not networkx.is_strongly_connected(graph):
        return False
    return networkx.is_aperiodic(graph)


def _power(matrix, tol, max_iter, label):
    vector = numpy.ones(matrix.shape[0])
    estimate = 0.0
    residual = numpy.inf
    for iteration in range(1, int(max_iter) + 1):
        image = matrix.dot(vector)
        estimate = image.max()
        image = image / estimate
        residual = numpy.abs(image - vector).max()
        vector = image
        if residual < tol:
            logger('spectral').debug(
                '{label} power iteration converged after {count} steps '
                '(residual {residual:.3g}).'.format(
                    label=label, count=iteration, residual=residual))
            return estimate, vector
    raise NonConvergence(
        '{label} power iteration did not converge in {count} steps; last '
        'residual {residual:.3g}.'.format(
            label=label, count=max_iter, residual=residual),
        last_residual=residual)


def principal_triple(model, tol=SPECTRAL_TOLERANCE,
                     max_iter=SPECTRAL_MAX_ITER):
    """(lambda, h0, mu0) with mu0(1) = 1 and mu0(h0) = 1."""
    model = as_finite_model(model)
    q = model.dense()
    if not is_primitive(q):
        raise AmbiguousSpectrum(
            'Q is not primitive (reducible or periodic support); its '
            'principal eigenvalue is not isolated.')
    _, h0 = _power(q, tol, max_iter, 'Forward')
    _, mu0 = _power(q.T, tol, max_iter, 'Adjoint')
    mu0 = mu0 / mu0.sum()
    h0 = h0 / mu0.dot(h0)
    eigenvalue = float(mu0.dot(q.dot(h0)))
    logger('spectral').info(
        'Principal eigenvalue {value:.12g} on {size} states.'.format(
            value=eigenvalue, size=model.size))
    return SpectralTriple(eigenvalue, h0, mu0)


def _deflated(q, triple):
    return q - triple.eigenvalue * numpy.outer(triple.h0, triple.mu0)


def second_eigenvalue_modulus(model, triple, tol=1e-10, max_iter=10000):
    """|lambda_2| from the growth of (Q - lambda h0 mu0)^k.

    Two-step norm ratios are used so that a pair of eigenvalues of equal
    modulus and opposite sign does not make the estimate oscillate.
    """
    model = as_finite_model(model)
    deflated = _deflated(model.dense(), triple)
    vector = numpy.cos(numpy.arange(model.size) + 1.0)
    vector /= numpy.abs(vector).max()
    estimate = numpy.nan
    for _ in range(int(max_iter)):
        image = deflated.dot(deflated.dot(vector))
        scale = numpy.abs(image).max()
        if scale <= ROUNDING_SLACK * triple.eigenvalue ** 2:
            return 0.0
        previous, estimate = estimate, math.sqrt(scale)
        vector = image / scale
        if abs(estimate - previous) <= tol * estimate:
            break
    else:
        logger('spectral').warning(
            'Second eigenvalue estimate {value:.6g} did not settle within '
            '{count} steps.'.format(value=estimate, count=max_iter))
    return float(estimate)


def spectral_radius(matrix):
    matrix = numpy.asarray(matrix, dtype=float)
    if not numpy.any(matrix):
        return 0.0
    return float(numpy.abs(linalg.eigvals(matrix)).max())


def _radius_for_resolvent(model, triple):
    if triple is not None:
        return triple.eigenvalue
    q = model.dense()
    if numpy.any(q) and is_primitive(q):
        return principal_triple(model).eigenvalue
    return spectral_radius(q)


def _check_theta(theta, radius):
    if not theta > radius:
        raise InvalidArgument(
            'Resolvent needs theta > lambda = {radius:.12g}, got '
            '{theta}.'.format(radius=radius, theta=theta))


def resolvent(model, theta, triple=None):
    """(theta I - Q)^{-1} = sum_k theta^{-k-1} Q^k for theta > lambda."""
    model = as_finite_model(model, strict=False)
    _check_theta(theta, _radius_for_resolvent(model, triple))
    q = model.dense()
    return linalg.inv(theta * numpy.eye(model.size) - q)


def resolvent_series(model, theta, tol=1e-12, max_terms=100000,
                     triple=None):
    """Truncated Neumann series of the resolvent."""
    model = as_finite_model(model, strict=False)
    radius = _radius_for_resolvent(model, triple)
    _check_theta(theta, radius)
    q = model.dense()
    term = numpy.eye(model.size) / theta
    total = term.copy()
    tail_factor = theta / (theta - radius)
    for _ in range(int(max_terms)):
        term = term.dot(q) / theta
        total += term
        if numpy.abs(term).max() * tail_factor < tol:
            return total
    raise NonConvergence(
        'Resolvent series did not reach {tol} in {count} terms.'.format(
            tol=tol, count=max_terms),
        last_residual=numpy.abs(term).max())


def h0_via_resolvent(model, theta, cert, triple=None):
    """h0 = H(1_C) / mu0(H(1_C)) with H = (lambda_theta I - K)^{-1}.

    K = R_theta - theta^{-m0-1} epsilon 1_C (x) nu and
    lambda_theta = 1 / (theta - lambda).
    """
    model = as_finite_model(model)
    triple = triple or principal_triple(model)
    resolved = resolvent(model, theta, triple=triple)
    lambda_theta = 1.0 / (theta - triple.eigenvalue)
    indicator = numpy.asarray(cert.c_mask, dtype=float)
    inner = resolved - theta ** (-cert.m0 - 1) * cert.epsilon * \
        numpy.outer(indicator, cert.nu)
    radius = spectral_radius(inner)
    if radius >= lambda_theta * (1 - ROUNDING_SLACK):
        logger('spectral').error(
            'Inner operator radius {radius:.12g} >= lambda_theta '
            '{lambda_theta:.12g}.'.format(radius=radius,
                                          lambda_theta=lambda_theta))
        raise CertificateError(
            'Small-set certificate is inconsistent with Q: spectral radius '
            'of R - theta^(-m0-1) eps 1_C nu is {radius:.12g} >= '
            '{lambda_theta:.12g}.'.format(radius=radius,
                                          lambda_theta=lambda_theta))
    image = linalg.solve(lambda_theta * numpy.eye(model.size) - inner,
                         indicator)
    return image / triple.mu0.dot(image)


def twisted_kernel(model, triple):
    """Doob transform lambda^{-1} h0(x)^{-1} Q(x, y) h0(y)."""
    model = as_finite_model(model)
    h0 = numpy.asarray(triple.h0, dtype=float)
    if numpy.any(h0 <= 0):
        raise InvalidArgument('h0 must be strictly positive.')
    q = model.dense()
    twisted = q * h0[None, :] / (triple.eigenvalue * h0[:, None])
    deviation = numpy.abs(twisted.sum(axis=1) - 1.0).max()
    if deviation > TWISTED_ROW_TOLERANCE:
        raise InvalidArgument(
            '(lambda, h0) is not an eigenpair of Q: twisted rows miss 1 by '
            'up to {deviation:.3g}.'.format(deviation=deviation))
    return twisted


def twisted_invariant(triple):
    """Invariant law of the twisted kernel: mu0 * h0 renormalized."""
    weights = numpy.asarray(triple.mu0) * numpy.asarray(triple.h0)
    return weights / weights.sum()


def simulate_twisted_chain(transition, x_index, n, generator):
    """State path x_0, ..., x_n of a chain driven by a stochastic matrix."""
    transition = numpy.asarray(transition, dtype=float)
    cdf = numpy.cumsum(transition, axis=1)
    cdf[:, -1] = 1.0
    path = numpy.empty(int(n) + 1, dtype=int)
    path[0] = x_index
    uniforms = generator.random(int(n))
    for k in range(int(n)):
        path[k + 1] = numpy.searchsorted(cdf[path[k]], uniforms[k],
                                         side='right')
    return path


def v_norm(phi, v):
    """||phi||_v = sup |phi| / v."""
    return float(numpy.max(numpy.abs(phi) / v))


def met_gaps(model, triple, x_index, phi, horizons):
    """|lambda^{-n} Q^n(phi)(x) - h0(x) mu0(phi)| for each n.

    Uses Q^n = lambda^n h0 mu0 + (Q - lambda h0 mu0)^n, so small gaps are
    computed without cancellation.
    """
    deflated = _deflated(model.dense(), triple) / triple.eigenvalue
    vector = numpy.asarray(phi, dtype=float)
    gaps = {}
    done = 0
    for n in sorted(set(int(n) for n in horizons)):
        while done < n:
            vector = deflated.dot(vector)
            done += 1
        gaps[n] = float(abs(vector[x_index]))
    return gaps


def met_decay(model, triple, x_index, phi_set, n_range, v_weights=None):
    """Least-squares fit of log MET gap against n.

    The fit is a heuristic reading of (B0, B1); B0 is raised until the line
    bounds every residual used.
    """
    model = as_finite_model(model)
    n_range = list(n_range)
    if not n_range:
        raise InvalidArgument('n_range must not be empty.')
    v = model.v if v_weights is None else numpy.asarray(v_weights, float)
    residuals = []
    for phi in phi_set:
        norm = v_norm(phi, v)
        for n, gap in sorted(met_gaps(model, triple, x_index, phi,
                                      n_range).items()):
            residuals.append((n, gap, norm))
    used = [(n, gap, norm) for n, gap, norm in residuals
            if gap >= MET_GAP_FLOOR]
    if len(set(n for n, _, _ in used)) < 2:
        raise DegenerateFit(
            'Only {count} MET gaps above {floor}; nothing to fit.'.format(
                count=len(used), floor=MET_GAP_FLOOR))
    slope, intercept, r_squared = linear_fit(
        [n for n, _, _ in used], [math.log(gap) for _, gap, _ in used])
    rate = -slope
    if not rate > 0:
        raise DegenerateFit(
            'MET gaps do not decay (fitted slope {slope:.6g}).'.format(
                slope=slope))
    prefactor = max(gap * math.exp(n * rate) / (norm * v[x_index])
                    for n, gap, norm in used)
    prefactor = max(prefactor, 1.0)

    second = second_eigenvalue_modulus(model, triple)
    if second > 0:
        rate_bound = math.log(triple.eigenvalue / second)
        rate_ok = rate >= MET_RATE_SLACK * rate_bound
    else:
        rate_bound, rate_ok = numpy.inf, True
    if not rate_ok:
        logger('spectral').warning(
            'Fitted MET rate {rate:.6g} is below {slack} * log(lambda / '
            '|lambda_2|) = {bound:.6g}.'.format(
                rate=rate, slack=MET_RATE_SLACK,
                bound=MET_RATE_SLACK * rate_bound))
    return MetFit(B0=prefactor, B1=rate,
                  residuals=[(n, gap) for n, gap, _ in residuals],
                  intercept=intercept, r_squared=r_squared,
                  rate_bound=rate_bound, rate_ok=rate_ok)


def variance_threshold_phi(x_index, v_weights, triple, met, c1):
    """c1 (ceil(log(B0^2 v(x) / h0(x)) / B1) + 1).

    B0 <= 1 is replaced by 1 + 1e-9 and reported through `clamped`. A
    negative logarithm counts as zero steps and sets `floored`, so the
    value never drops below c1.
    """
    prefactor, clamped = met.B0, False
    if prefactor <= 1:
        prefactor, clamped = B0_CLAMP, True
        logger('spectral').warning(
            'B0 = {value} <= 1 clamped to {clamp}.'.format(
                value=met.B0, clamp=B0_CLAMP))
    if not met.B1 > 0:
        raise InvalidArgument('B1 must be > 0, got {B1}.'.format(B1=met.B1))
    ratio = numpy.asarray(v_weights, dtype=float)[x_index] / \
        triple.h0[x_index]
    steps = math.log(prefactor ** 2 * ratio) / met.B1
    nearest = round(steps)
    if abs(steps - nearest) < 1e-9:
        steps = nearest
    steps = int(math.ceil(steps))
    return PhiThreshold(int(c1) * (max(steps, 0) + 1), clamped, steps < 0)


def spectral_radius_lower_bound(cert, triple):
    """epsilon nu(C) <= lambda^{m0}; raises CertificateError otherwise."""
    lower = float(cert.epsilon * numpy.asarray(cert.nu)[
        numpy.asarray(cert.c_mask, dtype=bool)].sum())
    upper = float(triple.eigenvalue ** cert.m0)
    holds = lower <= upper * (1 + ROUNDING_SLACK)
    if not holds:
        raise CertificateError(
            'epsilon * nu(C) = {lower:.12g} exceeds lambda^m0 = '
            '{upper:.12g}.'.format(lower=lower, upper=upper))
    return RadiusBound(lower, upper, holds)
