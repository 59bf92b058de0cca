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


# Model identifiers accepted by the CLI and the model registry
MODEL_GAUSSIAN_RW = 'gaussian-rw'
MODEL_AR = 'ar'
MODEL_CIR = 'cir'
MODEL_FINITE = 'finite'
CONTINUOUS_MODELS = [MODEL_GAUSSIAN_RW, MODEL_AR, MODEL_CIR]

STATE_SPACE_REAL_LINE = 'real-line'
STATE_SPACE_POSITIVE = 'positive-half-line'
STATE_SPACE_FINITE = 'finite'

# Quadrature
QUADRATURE_TRAPEZOID = 'trapezoid'
QUADRATURE_SIMPSON = 'simpson'
QUADRATURE_RULES = [QUADRATURE_TRAPEZOID, QUADRATURE_SIMPSON]
# U=0 row mass below this is reported as truncation
TRUNCATION_MASS_FLOOR = 0.999
DEFAULT_BAND_WIDTH = 12.0
# default oracle grids: AR spans +-12 (and x0 +- 6) at step 0.01; CIR
# spacing is this fraction of the smallest one-step standard deviation
AR_GRID_HALF_WIDTH = 12.0
AR_GRID_MARGIN = 6.0
AR_GRID_STEP = 0.01
CIR_GRID_SPACING = 0.5

# Spectral defaults
SPECTRAL_TOLERANCE = 1e-12
SPECTRAL_MAX_ITER = 10 ** 6
MET_GAP_FLOOR = 1e-14
# raw Doob-transform row sums must be this close to 1
TWISTED_ROW_TOLERANCE = 1e-10
MET_RATE_SLACK = 0.9
B0_CLAMP = 1 + 1e-9
DENSE_STATE_GUARD = 4096
# row masses this many ulps (per state) from 1 are taken as exactly 1
ROW_MASS_ULPS = 8

# Variance lab guards
TENSOR_STATE_GUARD = 64
COALESCENT_HORIZON_GUARD = 20
BRUTE_FORCE_BITS_GUARD = 24
LOG_RATIO_SATURATION = 700.0
Z_SCORE_FLAG = 4.0

# Drift audit
DRIFT_GRID_POINTS = 2001
DRIFT_GRID_LEVEL_FACTOR = 3.0
DRIFT_TAIL_RATIO = 1e-8

# Seeds
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
UINT64_MASK = (1 << 64) - 1

# CSV layouts
RUN_RECORD_COLUMNS = ['k', 'log_mean_weight', 'log_gamma_cum']
SPECTRAL_COLUMNS = ['state', 'h0', 'mu0']
VARIANCE_COLUMNS = ['model', 'x0', 'n', 'N', 'R', 'rel_var', 'std_err',
                    'log_gamma_oracle', 'failures']
UNBIASED_COLUMNS = ['model', 'x0', 'n', 'N', 'R', 'mean_ratio', 'std_err',
                    'z', 'flagged', 'exact']
LABELS_HEADER = 'labels: '
LAMBDA_HEADER = 'lambda = '

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2
EXIT_RESOURCE_GUARD = 3

# Config file discovery
CONFIG_PATH_ENV = 'FK_PARTICLES_CONFIG_PATH'
DEFAULT_CONFIG_PATH = os.path.join('~', '.fk_particles.cfg')
SLOW_TESTS_ENV = 'FK_PARTICLES_SLOW'

LOGGER_NAME = 'fk_particles'
