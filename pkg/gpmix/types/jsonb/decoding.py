import collections.abc
import typing

import numpy as np

from ...definition.errors import ShapeMismatchError
from ...gmm import GmmParams


def apply_decoders(value: typing.Any):
    if isinstance(value, list):
        return [apply_decoders(item) for item in value]
    if value is None:
        return float('nan')
    return value


def decode(data: collections.abc.Mapping):
    result = {}
    for k, v in data.items():
        if isinstance(v, collections.abc.Mapping):
            result[k] = decode(v)
        else:
            result[k] = apply_decoders(v)
    return result


def decode_params(document: collections.abc.Mapping) -> GmmParams:
    missing = [key for key in ('weights', 'means', 'diag_covs') if key not in document]
    if missing:
        raise ShapeMismatchError(f'Mixture document lacks {", ".join(missing)}')
    data = decode(document)
    params = GmmParams(
        weights=np.asarray(data['weights'], dtype=np.float64),
        means=np.asarray(data['means'], dtype=np.float64),
        diag_covs=np.asarray(data['diag_covs'], dtype=np.float64),
    )
    for key, actual in (('d', params.d), ('r', params.r)):
        if key in document and document[key] != actual:
            raise ShapeMismatchError(f'Mixture document declares {key}={document[key]} but stores {key}={actual}')
    return params
