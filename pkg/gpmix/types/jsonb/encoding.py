import collections.abc
import json
import math
import typing
from functools import singledispatch

import numpy as np


@singledispatch
def encode_rule(value: typing.Any):
    return value


@encode_rule.register(float)
def encode_float(value: float):
    # JSON has no NaN or infinity
    return value if math.isfinite(value) else None


@encode_rule.register(complex)
def encode_complex(value: complex):
    return [encode_float(value.real), encode_float(value.imag)]


@encode_rule.register(np.generic)
def encode_numpy_scalar(value: np.generic):
    return encode_rule(value.item())


@encode_rule.register(np.ndarray)
def encode_array(value: np.ndarray):
    return encode_rule(value.tolist())


@encode_rule.register(list)
@encode_rule.register(tuple)
def encode_sequence(value: collections.abc.Sequence):
    return [encode_rule(item) for item in value]


def encode(data: collections.abc.Mapping):
    result = {}
    for k, v in data.items():
        if isinstance(v, collections.abc.Mapping):
            result[k] = encode(v)
        else:
            result[k] = encode_rule(v)
    return result


def dumps(data: collections.abc.Mapping) -> str:
    return json.dumps(encode(data), indent=2) + '\n'
