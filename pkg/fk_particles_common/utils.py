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
import logging
from functools import wraps
from inspect import signature, Parameter

# Third party imports
import numpy

# This package imports
from .constants import LOGGER_NAME

LOG_LIST_LIMIT = 8


def logger(name=None):
    """Return the package logger, or one of its children.

    Library code never installs handlers; the CLI does.
    """
    base = logging.getLogger(LOGGER_NAME)
    if name:
        return base.getChild(name)
    return base


def get_args(func):
    """
    recursively collect all args from functions wrapped by decorators.
    """

    args = set()
    if hasattr(func, '__wrapped__'):
        args.update(get_args(func.__wrapped__))
    params = signature(func, follow_wrapped=False).parameters
    for name, param in params.items():
        if param.kind in (Parameter.VAR_POSITIONAL, Parameter.VAR_KEYWORD):
            continue
        args.add(name)
    return args


def op(func):
    """
    This decorator wraps command operations and provides the values of a
    resolved configuration mapping as function inputs.
    Any inputs provided directly to the operation override corresponding
    configuration values; keys absent from both fall back to the function
    defaults.

    In order for other decorators to cooperate with @op, they must expose the
    wrapped function object as newfunction.__wrapped__ (functools.wraps
    does this).
    """

    @wraps(func)
    def wrapper(config=None, **kwargs):
        config = config or {}
        requested_inputs = get_args(func)

        processed_kwargs = {}
        for key in requested_inputs:
            if key in kwargs:
                processed_kwargs[key] = kwargs[key]
            elif key in config:
                processed_kwargs[key] = config[key]

        return func(**processed_kwargs)

    return wrapper


def prepare_for_log(inputs):
    result = {}
    for key, value in inputs.items():
        if isinstance(value, dict):
            value = prepare_for_log(value)
        elif isinstance(value, (list, tuple)) and len(value) > LOG_LIST_LIMIT:
            value = '[{first}, ..., {last}] ({count} items)'.format(
                first=value[0], last=value[-1], count=len(value))
        result[key] = value
    return result


def linear_fit(xs, ys):
    """Least-squares line through (xs, ys).

    :returns: (slope, intercept, coefficient of determination)
    """
    xs = numpy.asarray(xs, dtype=float)
    ys = numpy.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError('At least two points are needed for a line fit.')
    slope, intercept = numpy.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = numpy.sum((ys - ys.mean()) ** 2)
    if total == 0:
        r_squared = 1.0 if numpy.allclose(residual, 0) else 0.0
    else:
        r_squared = 1.0 - numpy.sum(residual ** 2) / total
    return float(slope), float(intercept), float(r_squared)
