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
from functools import wraps

# Third party imports

# This package imports
from .constants import (
    MODEL_AR,
    MODEL_CIR,
    MODEL_FINITE,
)
from .models import build_model
from .exceptions import ConfigurationError
from .serialization import read_finite_model
from .utils import logger

MODEL_KEYS = {
    MODEL_AR: ['alpha'],
    MODEL_CIR: ['theta', 'mu', 'sigma', 'delta', 'alpha'],
}


def load_model(model=None, model_file=None, alpha=None, theta=None,
               mu=None, sigma=None, delta=None):
    """A FiniteModel read from `model_file`, or a registered model."""
    if model_file:
        if model not in (None, MODEL_FINITE):
            raise ConfigurationError(
                'model', '"{model}" cannot be combined with a model '
                'file'.format(model=model))
        try:
            loaded = read_finite_model(model_file)
        except IOError as e:
            raise ConfigurationError(
                'model_file', 'unable to read {path} ({error})'.format(
                    path=model_file, error=e))
        logger().debug('Loaded {model!r} from {path}.'.format(
            model=loaded, path=model_file))
        return loaded
    if model in (None, MODEL_FINITE):
        raise ConfigurationError(
            'model', 'a model id, a fixture or a model file is required')

    params = {'alpha': alpha, 'theta': theta, 'mu': mu, 'sigma': sigma,
              'delta': delta}
    for key in MODEL_KEYS.get(model, []):
        if params[key] is None:
            raise ConfigurationError(
                key, 'a value is required by model {model}'.format(
                    model=model))
    return build_model(model, **dict((key, value)
                                     for key, value in params.items()
                                     if value is not None))


def with_model(f):
    @wraps(f)
    def wrapper(model=None, model_file=None, alpha=None, theta=None,
                mu=None, sigma=None, delta=None, **kwargs):
        kwargs['model'] = load_model(model=model,
                                     model_file=model_file,
                                     alpha=alpha,
                                     theta=theta,
                                     mu=mu,
                                     sigma=sigma,
                                     delta=delta)
        return f(**kwargs)
    return wrapper
