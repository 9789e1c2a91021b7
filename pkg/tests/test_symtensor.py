import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from gpmix import (
    EmptyOmegaError,
    InvalidViewError,
    LabelError,
    OmegaTensor,
    ShapeMismatchError,
    SymTensor3,
    flat_submatrix,
    from_rank_one_sum,
    hs_norm,
    omega_extract,
    omega_norm,
    omega_rank_one_sum,
)
from gpmix.numkit import numeric_rank
from gpmix.symtensor import canonical_triple, multiplicities

from .conftest import EXAMPLE_VECTORS, EXAMPLE_WEIGHTS


def test_packed_sizes():
    assert SymTensor3.size(4) == 20
    assert OmegaTensor.size(6) == 20
    assert len(SymTensor3.zeros(5).values) == 35
    assert len(OmegaTensor.zeros(5).values) == 10


def test_canonical_triple_sorts_and_checks_range():
    assert canonical_triple(5, 1, 3) == (1, 3, 5)
    with pytest.raises(LabelError):
        canonical_triple(0, 1, 6, d=6)
    with pytest.raises(LabelError):
        canonical_triple(-1, 1, 2)


def test_lookup_is_permutation_invariant(example_tensor):
    for triple in itertools.permutations((1, 3, 5)):
        assert example_tensor[triple] == example_tensor[(1, 3, 5)]
    assert example_tensor[(0, 1, 3)] == pytest.approx(1.0)


def test_omega_rejects_repeated_labels(example_tensor):
    with pytest.raises(LabelError):
        example_tensor[(0, 0, 1)]
    with pytest.raises(LabelError):
        example_tensor.take(np.array([0, 1]), 1, 2)


def test_omega_needs_three_labels():
    with pytest.raises(EmptyOmegaError):
        OmegaTensor(2, np.zeros(0))
    with pytest.raises(EmptyOmegaError):
        omega_rank_one_sum([1.0], [[1.0, 2.0]])


def test_wrong_value_count_is_rejected():
    with pytest.raises(ShapeMismatchError):
        OmegaTensor(5, np.zeros(11))
    with pytest.raises(ShapeMismatchError):
        SymTensor3(3, np.ones(10) * 1j, 'real')


def test_dense_round_trip_is_symmetric():
    generator = np.random.default_rng(3)
    weights = generator.standard_normal(3)
    vectors = generator.standard_normal((3, 5))
    tensor = from_rank_one_sum(weights, vectors)
    dense = tensor.dense()
    expected = np.einsum('k,ka,kb,kc->abc', weights, vectors, vectors, vectors)
    assert_allclose(dense, expected, atol=1e-12)
    for order in itertools.permutations(range(3)):
        assert_array_equal(dense, dense.transpose(order))
    assert_array_equal(SymTensor3.from_dense(dense, atol=0.0).values, tensor.values)


def test_from_dense_detects_asymmetry():
    array = np.zeros((4, 4, 4))
    array[0, 1, 2] = 1.0
    with pytest.raises(ShapeMismatchError):
        SymTensor3.from_dense(array, atol=1e-12)


def test_hs_norm_counts_ordered_multiplicities():
    generator = np.random.default_rng(5)
    tensor = SymTensor3(6, generator.standard_normal(SymTensor3.size(6)))
    assert hs_norm(tensor) == pytest.approx(np.linalg.norm(tensor.dense()), rel=1e-12)
    assert multiplicities(3).sum() == 27


def test_omega_norm_counts_each_distinct_triple_six_times():
    generator = np.random.default_rng(6)
    tensor = SymTensor3(6, generator.standard_normal(SymTensor3.size(6)))
    dense = tensor.dense()
    a, b, c = np.indices(dense.shape)
    distinct = (a != b) & (b != c) & (a != c)
    assert omega_norm(omega_extract(tensor)) == pytest.approx(np.sqrt(np.sum(dense[distinct] ** 2)), rel=1e-12)


def test_omega_extract_matches_rank_one_sum():
    extracted = omega_extract(from_rank_one_sum(EXAMPLE_WEIGHTS, EXAMPLE_VECTORS))
    assert_allclose(extracted.values, omega_rank_one_sum(EXAMPLE_WEIGHTS, EXAMPLE_VECTORS).values, atol=1e-14)


def test_rank_one_sum_rejects_mismatched_weights():
    with pytest.raises(ShapeMismatchError):
        omega_rank_one_sum([1.0, 2.0, 3.0], EXAMPLE_VECTORS)


def test_flat_submatrix_of_example(example_tensor):
    view = flat_submatrix(example_tensor, [1, 2], [3, 4, 5])
    assert view.row_labels == (1, 2)
    assert view.col_labels == (3, 4, 5)
    assert_allclose(view.matrix, [[1.0, -0.8, -1.4], [-0.8, 2.8, 4.0]], atol=1e-12)
    assert numeric_rank(view.matrix).rank == 2


@pytest.mark.parametrize('rows, cols', [([0, 1], [2, 3]), ([1, 2], [2, 3]), ([1, 2], [3, 6])])
def test_flat_submatrix_rejects_invalid_views(example_tensor, rows, cols):
    with pytest.raises(InvalidViewError):
        flat_submatrix(example_tensor, rows, cols)


def test_take_broadcasts(example_tensor):
    values = example_tensor.take(0, np.array([1, 2])[:, None], np.array([3, 4, 5])[None, :])
    assert values.shape == (2, 3)
    assert values[1, 2] == pytest.approx(4.0)


def test_tensor_arithmetic(example_tensor):
    bump = np.zeros(OmegaTensor.size(6))
    bump[example_tensor.slot(5, 3, 1)] = 1.0
    changed = example_tensor + OmegaTensor(6, bump)
    assert changed[(1, 3, 5)] == example_tensor[(1, 3, 5)] + 1.0
    assert omega_norm(changed - example_tensor) == pytest.approx(np.sqrt(6.0))
    assert_allclose((2 * example_tensor).values, example_tensor.values * 2)
    with pytest.raises(ShapeMismatchError):
        example_tensor + OmegaTensor.zeros(7)


def test_complex_tensors_are_tagged():
    tensor = OmegaTensor(4, np.array([1.0, 2.0, 3.0, 4.0]) * (1 + 1j))
    assert tensor.field == 'complex'
    assert tensor.is_complex
    assert OmegaTensor.zeros(4).field == 'real'
    assert omega_norm(tensor) == pytest.approx(np.sqrt(6.0 * 2.0 * 30.0))


def test_values_are_read_only(example_tensor):
    with pytest.raises(ValueError):
        example_tensor.values[0] = 1.0
