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

import os
import re
import pathlib
from setuptools import setup


def get_version():
    current_dir = pathlib.Path(__file__).parent.resolve()

    with open(os.path.join(current_dir, 'fk_particles_common/__version__.py'),
              'r') as outfile:
        var = outfile.read()
        return re.search(r'\d+.\d+.\d+', var).group()


setup(
    zip_safe=False,
    name='fk-particles',
    version=get_version(),
    packages=[
        'fk_particles_common',
        'fk_particles_cli',
    ],
    package_data={
        'fk_particles_cli': ['fixtures/*.csv'],
    },
    license='LICENSE',
    description='Particle approximations of Feynman-Kac formulae with '
                'exact oracles, spectral and drift audits.',
    python_requires='>=3.6',
    install_requires=[
        "numpy>=1.17",
        "scipy>=1.4",
        "networkx>=2.5",
        "pyyaml>=5.1",
    ],
    entry_points={
        'console_scripts': [
            'fk-particles = fk_particles_cli:main',
        ],
    },
)
