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

from ...utils import op, get_args


def test_get_args_no_args():
    def func():
        ""

    assert set() == get_args(func)


def test_get_args_same_arg():
    def decorator(f):
        def wrapper(yes, no, **kwargs):
            ""
        wrapper.__wrapped__ = f
        return wrapper

    @decorator
    def func(yes):
        ""

    assert set(['yes', 'no']) == get_args(func)


def test_get_args_multiple_levels():
    def decorator(f):
        def wrapper(one, **kwargs):
            ""
        wrapper.__wrapped__ = f
        return wrapper

    def decorator_2(f):
        def wrapper(two, **kwargs):
            ""
        wrapper.__wrapped__ = f
        return wrapper

    @decorator
    @decorator_2
    def func(three):
        ""

    assert {'one', 'two', 'three'} == get_args(func)


def test_get_args_skips_var_args():
    def func(a, *args, **kwargs):
        ""

    assert {'a'} == get_args(func)


@op
def example_operation(model, N, R, seed=None):
    return model, N, R, seed


def test_op_config_only():
    obj = object()
    config = {'model': obj, 'N': 2, 'R': 3}

    assert (obj, 2, 3, None) == example_operation(config)


def test_op_inputs_only():
    obj = object()

    assert (obj, 10, 20, 7) == example_operation(model=obj, N=10, R=20,
                                                 seed=7)


def test_op_inputs_override_config():
    original = object()
    replacement = object()
    config = {'model': original, 'N': 2, 'R': 3, 'seed': 1}

    assert (replacement, 2, 3, 1) == example_operation(config,
                                                       model=replacement)


def test_op_ignores_unrequested_keys():
    config = {'model': 'ar', 'N': 1, 'R': 2, 'alpha': 0.4}

    assert ('ar', 1, 2, None) == example_operation(config)
