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
import io
import os
import csv
import math

# Third party imports
import numpy

# This package imports
from .core import FiniteModel
from .spectral import SpectralTriple
from .constants import (
    LABELS_HEADER,
    LAMBDA_HEADER,
    SPECTRAL_COLUMNS,
    VARIANCE_COLUMNS,
    UNBIASED_COLUMNS,
    RUN_RECORD_COLUMNS,
)
from .exceptions import InvalidArgument

FLOAT_FORMAT = '%.17e'


def format_value(value):
    """Full-precision text for floats, plain text for everything else."""
    if isinstance(value, (bool, numpy.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, numpy.floating)):
        return repr(float(value))
    return str(value)


def write_finite_model(model, stream):
    labels = ','.join(str(label) for label in model.labels)
    numpy.savetxt(stream, model.dense(), fmt=FLOAT_FORMAT, delimiter=',',
                  header=LABELS_HEADER + labels)


def read_finite_model(path):
    with open(os.path.expanduser(path)) as stream:
        return parse_finite_model(stream.read(),
                                  name=os.path.splitext(
                                      os.path.basename(path))[0])


def parse_finite_model(text, name='finite'):
    lines = text.splitlines()
    labels = None
    if lines and lines[0].startswith('#'):
        header = lines[0].lstrip('#').strip()
        if not header.startswith(LABELS_HEADER.strip()):
            raise InvalidArgument(
                'Model file header must read "# {prefix}...", got '
                '"{line}".'.format(prefix=LABELS_HEADER, line=lines[0]))
        labels = [label.strip() for label in
                  header[len(LABELS_HEADER.strip()):].split(',')]
    try:
        q_matrix = numpy.loadtxt(io.StringIO(text), delimiter=',',
                                 comments='#', ndmin=2)
    except ValueError as e:
        raise InvalidArgument(
            'Model file is not a numeric CSV matrix: {error}'.format(
                error=e))
    return FiniteModel(q_matrix, labels=labels, metadata={'name': name})


def write_run_record(record, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(RUN_RECORD_COLUMNS)
    values = list(record.log_mean_weights)
    for k, value in enumerate(values):
        writer.writerow([k, format_value(value),
                         format_value(math.fsum(values[:k + 1]))])


def write_spectral_triple(triple, labels, stream, extra=None):
    """`# lambda = ...` header, then state,h0,mu0 plus extra columns.

    :param extra: ordered list of (column name, per-state values).
    """
    extra = extra or []
    stream.write('# {prefix}{value}\n'.format(
        prefix=LAMBDA_HEADER, value=format_value(triple.eigenvalue)))
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(SPECTRAL_COLUMNS + [name for name, _ in extra])
    for index, label in enumerate(labels):
        writer.writerow([label, format_value(triple.h0[index]),
                         format_value(triple.mu0[index])] +
                        [format_value(values[index]) for _, values in extra])


def read_spectral_triple(stream):
    header = stream.readline().lstrip('#').strip()
    if not header.startswith(LAMBDA_HEADER.strip()):
        raise InvalidArgument(
            'Spectral file must start with "# {prefix}<value>".'.format(
                prefix=LAMBDA_HEADER))
    eigenvalue = float(header.split('=', 1)[1])
    rows = list(csv.DictReader(stream))
    return ([row['state'] for row in rows],
            SpectralTriple(eigenvalue,
                           numpy.array([float(row['h0']) for row in rows]),
                           numpy.array([float(row['mu0']) for row in rows])))


def _write_rows(rows, columns, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(getattr(row, column))
                         for column in columns])


def write_variance_table(rows, stream):
    _write_rows(rows, VARIANCE_COLUMNS, stream)


def write_unbiased_table(rows, stream):
    _write_rows(rows, UNBIASED_COLUMNS, stream)


def read_variance_table(stream):
    rows = []
    for row in csv.DictReader(stream):
        rows.append(dict((key, row[key] if key == 'model' else float(
            row[key])) for key in VARIANCE_COLUMNS))
    return rows


def format_drift_report(report, extra=None):
    """Flat key=value block."""
    pairs = [('holds', report.holds),
             ('b_empirical', report.b_empirical),
             ('check_points', report.check_points)]
    if report.worst_violation is not None:
        pairs.append(('worst_state', report.worst_violation.state))
        pairs.append(('worst_margin', report.worst_violation.margin))
    if report.rho is not None:
        pairs.append(('rho', report.rho))
        pairs.append(('b_prime', report.b_prime))
    for key, value in sorted((report.details or {}).items()):
        if numpy.ndim(value) == 0:
            pairs.append((key, value))
    pairs.extend(extra or [])
    return ''.join('{key}={value}\n'.format(key=key,
                                            value=format_value(value))
                   for key, value in pairs)


def parse_key_values(text):
    result = {}
    for line in text.splitlines():
        if '=' in line:
            key, value = line.split('=', 1)
            result[key.strip()] = value.strip()
    return result
