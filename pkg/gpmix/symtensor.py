import collections.abc
import dataclasses
import functools
import itertools
import math
import typing

import numpy as np

from .definition import contracts
from .definition.errors import (
    EmptyOmegaError,
    InvalidViewError,
    LabelError,
    ShapeMismatchError,
)

Triple = tuple[int, int, int]


def canonical_triple(i1: int, i2: int, i3: int, d: int | None = None) -> Triple:
    triple = tuple(sorted((int(i1), int(i2), int(i3))))
    if triple[0] < 0 or (d is not None and triple[2] >= d):
        raise LabelError(f'Labels {(i1, i2, i3)} out of range for dimension d={d}')
    return typing.cast(Triple, triple)


@functools.lru_cache(maxsize=None)
def multiset_triples(d: int) -> np.ndarray:
    return _readonly(np.array(list(itertools.combinations_with_replacement(range(d), 3)), dtype=np.intp).reshape(-1, 3))


@functools.lru_cache(maxsize=None)
def distinct_triples(d: int) -> np.ndarray:
    return _readonly(np.array(list(itertools.combinations(range(d), 3)), dtype=np.intp).reshape(-1, 3))


@functools.lru_cache(maxsize=None)
def _slot_lookup(d: int, distinct: bool) -> np.ndarray:
    triples = distinct_triples(d) if distinct else multiset_triples(d)
    lookup = np.full((d, d, d), -1, dtype=np.intp)
    slots = np.arange(len(triples))
    for order in itertools.permutations(range(3)):
        lookup[triples[:, order[0]], triples[:, order[1]], triples[:, order[2]]] = slots
    return _readonly(lookup)


@functools.lru_cache(maxsize=None)
def multiplicities(d: int) -> np.ndarray:
    t = multiset_triples(d)
    result = np.full(len(t), 3.0)
    result[(t[:, 0] < t[:, 1]) & (t[:, 1] < t[:, 2])] = 6.0
    result[t[:, 0] == t[:, 2]] = 1.0
    return _readonly(result)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _as_values(values: typing.Any, field: contracts.Field | None) -> np.ndarray:
    array = np.asarray(values)
    if field == 'complex' or (field is None and np.iscomplexobj(array)):
        array = array.astype(np.complex128)
    else:
        if np.iscomplexobj(array):
            raise ShapeMismatchError('Complex entries given for a tensor tagged real')
        array = array.astype(np.float64)
    return _readonly(array.copy())


class _PackedTensor:
    _distinct: typing.ClassVar[bool]

    def __init__(self, d: int, values: typing.Any, field: contracts.Field | None = None):
        if d < 1:
            raise ShapeMismatchError(f'Dimension must be positive, got d={d}')
        self._d = int(d)
        self._values = _as_values(values, field)
        if self._values.shape != (self.size(self._d),):
            raise ShapeMismatchError(
                f'{type(self).__name__} of dimension {d} stores {self.size(self._d)} values, got shape {self._values.shape}'
            )

    @staticmethod
    def size(d: int) -> int:
        raise NotImplementedError

    @property
    def d(self) -> int:
        return self._d

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def field(self) -> contracts.Field:
        return 'complex' if np.iscomplexobj(self._values) else 'real'

    @property
    def is_complex(self) -> bool:
        return self.field == 'complex'

    def triples(self) -> np.ndarray:
        return distinct_triples(self._d) if self._distinct else multiset_triples(self._d)

    def slot(self, i1: int, i2: int, i3: int) -> int:
        triple = canonical_triple(i1, i2, i3, self._d)
        index = int(_slot_lookup(self._d, self._distinct)[triple])
        if index < 0:
            raise LabelError(f'Labels {(i1, i2, i3)} are not pairwise distinct')
        return index

    def __getitem__(self, triple: tuple[int, int, int]) -> typing.Any:
        return self._values[self.slot(*triple)]

    def take(self, i1: typing.Any, i2: typing.Any, i3: typing.Any) -> np.ndarray:
        i1, i2, i3 = np.broadcast_arrays(
            np.asarray(i1, dtype=np.intp), np.asarray(i2, dtype=np.intp), np.asarray(i3, dtype=np.intp)
        )
        labels = np.stack([i1, i2, i3])
        if labels.size and (labels.min() < 0 or labels.max() >= self._d):
            raise LabelError(f'Labels out of range for dimension d={self._d}')
        slots = _slot_lookup(self._d, self._distinct)[i1, i2, i3]
        if np.any(slots < 0):
            raise LabelError('Requested labels are not pairwise distinct')
        return self._values[slots]

    def dense(self) -> np.ndarray:
        lookup = _slot_lookup(self._d, self._distinct)
        padded = np.append(self._values, np.zeros(1, dtype=self._values.dtype))
        return padded[lookup]

    def _check_compatible(self, other: typing.Any) -> None:
        if type(other) is not type(self) or other.d != self.d:
            raise ShapeMismatchError(f'Cannot combine {self!r} with {other!r}')

    def __add__(self, other: typing.Self) -> typing.Self:
        self._check_compatible(other)
        return type(self)(self._d, self._values + other.values)

    def __sub__(self, other: typing.Self) -> typing.Self:
        self._check_compatible(other)
        return type(self)(self._d, self._values - other.values)

    def __mul__(self, scalar: complex) -> typing.Self:
        return type(self)(self._d, self._values * scalar)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.d == other.d and np.array_equal(self._values, other.values)

    def __repr__(self) -> str:
        return f'{type(self).__name__}(d={self._d}, field={self.field})'


class SymTensor3(_PackedTensor):
    """
    Third-order symmetric tensor stored once per unordered label multiset,
    in the lexicographic order of `itertools.combinations_with_replacement`.
    """
    _distinct = False

    @staticmethod
    def size(d: int) -> int:
        return math.comb(d + 2, 3)

    @classmethod
    def zeros(cls, d: int, field: contracts.Field = 'real') -> typing.Self:
        return cls(d, np.zeros(cls.size(d)), field)

    @classmethod
    def from_dense(cls, array: typing.Any, atol: float | None = None) -> typing.Self:
        array = np.asarray(array)
        if array.ndim != 3 or len(set(array.shape)) != 1:
            raise ShapeMismatchError(f'Expected a cubical order-3 array, got shape {array.shape}')
        if atol is not None:
            for order in itertools.permutations(range(3)):
                if not np.allclose(array, array.transpose(order), rtol=0.0, atol=atol):
                    raise ShapeMismatchError('Array is not symmetric')
        t = multiset_triples(array.shape[0])
        return cls(array.shape[0], array[t[:, 0], t[:, 1], t[:, 2]])


class OmegaTensor(_PackedTensor):
    """Entries of a symmetric tensor on pairwise-distinct label triples only."""
    _distinct = True

    @staticmethod
    def size(d: int) -> int:
        return math.comb(d, 3)

    def __init__(self, d: int, values: typing.Any, field: contracts.Field | None = None):
        if d < 3:
            raise EmptyOmegaError(d)
        super().__init__(d, values, field)

    @classmethod
    def zeros(cls, d: int, field: contracts.Field = 'real') -> typing.Self:
        return cls(d, np.zeros(cls.size(d)), field)


@dataclasses.dataclass(frozen=True)
class FlatView:
    row_labels: tuple[int, ...]
    col_labels: tuple[int, ...]
    matrix: np.ndarray


def hs_norm(tensor: SymTensor3) -> float:
    weighted = multiplicities(tensor.d) * np.abs(tensor.values) ** 2
    return float(np.sqrt(weighted.sum()))


def omega_norm(tensor: OmegaTensor) -> float:
    return float(np.sqrt(6.0 * np.sum(np.abs(tensor.values) ** 2)))


def omega_extract(tensor: SymTensor3) -> OmegaTensor:
    if tensor.d < 3:
        raise EmptyOmegaError(tensor.d)
    t = distinct_triples(tensor.d)
    lookup = _slot_lookup(tensor.d, False)
    return OmegaTensor(tensor.d, tensor.values[lookup[t[:, 0], t[:, 1], t[:, 2]]], tensor.field)


def _rank_one_products(
    weights: typing.Any,
    vectors: typing.Any,
    triples: np.ndarray,
) -> np.ndarray:
    weights = np.atleast_1d(np.asarray(weights))
    vectors = np.atleast_2d(np.asarray(vectors))
    if weights.ndim != 1 or len(weights) != len(vectors):
        raise ShapeMismatchError(
            f'Got {weights.size} weights for {len(vectors)} vectors'
        )
    cubes = vectors[:, triples[:, 0]] * vectors[:, triples[:, 1]] * vectors[:, triples[:, 2]]
    return weights @ cubes


def from_rank_one_sum(weights: typing.Any, vectors: typing.Any) -> SymTensor3:
    vectors = np.atleast_2d(np.asarray(vectors))
    d = vectors.shape[1]
    return SymTensor3(d, _rank_one_products(weights, vectors, multiset_triples(d)))


def omega_rank_one_sum(weights: typing.Any, vectors: typing.Any) -> OmegaTensor:
    vectors = np.atleast_2d(np.asarray(vectors))
    d = vectors.shape[1]
    if d < 3:
        raise EmptyOmegaError(d)
    return OmegaTensor(d, _rank_one_products(weights, vectors, distinct_triples(d)))


def flat_submatrix(
    tensor: OmegaTensor,
    rows: collections.abc.Iterable[int],
    cols: collections.abc.Iterable[int],
) -> FlatView:
    row_labels = tuple(sorted(set(rows)))
    col_labels = tuple(sorted(set(cols)))
    if 0 in row_labels or 0 in col_labels:
        raise InvalidViewError('Label 0 is reserved for the fixed mode of the flattening')
    if set(row_labels) & set(col_labels):
        raise InvalidViewError(f'Row and column labels overlap: {sorted(set(row_labels) & set(col_labels))}')
    if any(label >= tensor.d or label < 0 for label in row_labels + col_labels):
        raise InvalidViewError(f'Labels out of range for dimension d={tensor.d}')
    lookup = _slot_lookup(tensor.d, True)
    slots = lookup[0, np.array(row_labels, dtype=np.intp)[:, None], np.array(col_labels, dtype=np.intp)[None, :]]
    return FlatView(row_labels, col_labels, tensor.values[slots])
