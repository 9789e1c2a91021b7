import json
import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from gpmix import OmegaTensor, ParseError, ShapeMismatchError
from gpmix.types import ist3, jsonb, samples

from .conftest import random_params


def test_ist3_round_trip(example_tensor):
    text = ist3.dumps(example_tensor)
    assert text.startswith('ist3 d=6 field=real\n')
    assert '0 1 2 ' in text
    assert_array_equal(ist3.loads(text).values, example_tensor.values)


def test_ist3_complex_round_trip():
    generator = np.random.default_rng(0)
    values = generator.standard_normal(10) + 1j * generator.standard_normal(10)
    tensor = OmegaTensor(5, values)
    parsed = ist3.loads(ist3.dumps(tensor))
    assert parsed.field == 'complex'
    assert_array_equal(parsed.values, values)


def test_ist3_file_round_trip(tmp_path, example_tensor):
    path = tmp_path / 'tensor.ist3'
    ist3.dump(example_tensor, path)
    assert_array_equal(ist3.load(path).values, example_tensor.values)


def test_ist3_missing_triples_are_zero(caplog):
    with caplog.at_level(logging.WARNING):
        tensor = ist3.loads('ist3 d=4 field=real\n0 1 2 1.5\n')
    assert tensor[(0, 1, 2)] == 1.5
    assert tensor[(1, 2, 3)] == 0.0
    assert '3 of 4 distinct triples missing' in caplog.text


@pytest.mark.parametrize('text, line', [
    ('', 1),
    ('tensor d=4\n', 1),
    ('ist3 d=2 field=real\n', 1),
    ('ist3 d=4 field=real\n0 1 2\n', 2),
    ('ist3 d=4 field=real\n0 1 2 1.0\n2 1 3 1.0\n', 3),
    ('ist3 d=4 field=real\n0 1 2 1.0\n\n0 1 2 2.0\n', 4),
    ('ist3 d=4 field=real\n0 1 4 1.0\n', 2),
    ('ist3 d=4 field=real\n0 1 2 abc\n', 2),
    ('ist3 d=4 field=real\n0 1 2 nan\n', 2),
    ('ist3 d=4 field=complex\n0 1 2 1.0\n', 2),
])
def test_ist3_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as raised:
        ist3.loads(text)
    assert raised.value.line == line
    assert str(raised.value).startswith(f'line {line}:')


def test_samples_with_and_without_header():
    data = np.array([[1.0, -2.5, 3.0], [0.25, 1e-3, -7.0]])
    assert_array_equal(samples.loads(samples.dumps(data)), data)
    assert_array_equal(samples.loads(samples.dumps(data, header=True)), data)
    assert samples.dumps(data, header=True).startswith('y0,y1,y2\n')


def test_samples_skip_blank_lines():
    assert_array_equal(samples.loads('1,2\n\n3,4\n'), [[1.0, 2.0], [3.0, 4.0]])


@pytest.mark.parametrize('text, line', [
    ('1,2,3\n4,5\n', 2),
    ('1,2\nx,y\n', 2),
    ('1,nan\n', 1),
    ('a,b\n', 1),
    ('', 1),
])
def test_samples_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as raised:
        samples.loads(text)
    assert raised.value.line == line


def test_encode_handles_numpy_complex_and_nan():
    document = jsonb.encode({
        'values': np.array([1.0, np.nan]),
        'vectors': np.array([[1 + 2j, 3.0 + 0j]]),
        'count': np.int64(3),
        'nested': {'flags': ('a', 'b'), 'residual': np.float64(np.inf)},
    })
    assert document == {
        'values': [1.0, None],
        'vectors': [[[1.0, 2.0], [3.0, 0.0]]],
        'count': 3,
        'nested': {'flags': ['a', 'b'], 'residual': None},
    }


def test_dumps_is_strict_json():
    text = jsonb.dumps({'value': math.nan, 'items': [1.5, 2]})
    assert text.endswith('\n')
    assert json.loads(text) == {'value': None, 'items': [1.5, 2]}


def test_decode_turns_null_into_nan():
    decoded = jsonb.decode({'a': [1.0, None], 'b': {'c': None}})
    assert decoded['a'][0] == 1.0
    assert math.isnan(decoded['a'][1])
    assert math.isnan(decoded['b']['c'])


def test_params_document_round_trip():
    params = random_params(5, 2, 1)
    document = json.loads(jsonb.dumps({
        'd': params.d,
        'r': params.r,
        'weights': params.weights,
        'means': params.means,
        'diag_covs': params.diag_covs,
    }))
    decoded = jsonb.decode_params(document)
    assert_array_equal(decoded.weights, params.weights)
    assert_array_equal(decoded.means, params.means)
    assert_array_equal(decoded.diag_covs, params.diag_covs)


def test_params_document_is_checked():
    with pytest.raises(ShapeMismatchError):
        jsonb.decode_params({'weights': [1.0], 'means': [[0.0, 0.0]]})
    with pytest.raises(ShapeMismatchError):
        jsonb.decode_params({'d': 3, 'weights': [1.0], 'means': [[0.0, 0.0]], 'diag_covs': [[1.0, 1.0]]})
