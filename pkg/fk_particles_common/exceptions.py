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

from .constants import (
    EXIT_CONFIG,
    EXIT_CHECK_FAILED,
    EXIT_RESOURCE_GUARD,
)


class NonRecoverableError(Exception):
    """Base class of every error raised by fk-particles."""

    exit_code = EXIT_CHECK_FAILED


class InvalidArgument(NonRecoverableError, ValueError):
    exit_code = EXIT_CONFIG


class ConfigurationError(InvalidArgument):

    def __init__(self, key, message):
        self.key = key
        super(ConfigurationError, self).__init__(
            'Invalid configuration key "{key}": {message}'.format(
                key=key, message=message))


class Unsupported(NonRecoverableError):
    exit_code = EXIT_CONFIG


class NonConvergence(NonRecoverableError):

    def __init__(self, message, last_residual=None):
        self.last_residual = last_residual
        super(NonConvergence, self).__init__(message)


class AmbiguousSpectrum(NonRecoverableError):
    pass


class CertificateError(NonRecoverableError):
    pass


class DegenerateFit(NonRecoverableError):
    pass


class ExtinctionError(NonRecoverableError):

    def __init__(self, message, step=None):
        self.step = step
        super(ExtinctionError, self).__init__(message)


class DivergentIntegral(NonRecoverableError):
    pass


class NoMinorization(NonRecoverableError):
    pass


class DriftFailure(NonRecoverableError):

    def __init__(self, message, state=None, margin=None):
        self.state = state
        self.margin = margin
        super(DriftFailure, self).__init__(message)


class TooLarge(NonRecoverableError):
    exit_code = EXIT_RESOURCE_GUARD


class TruncationWarning(UserWarning):
    """Grid truncation lost more kernel mass than the configured floor."""
