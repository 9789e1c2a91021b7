import numpy as np
import pytest
from numpy.testing import assert_allclose

from gpmix import LmOptions, NonFiniteInputError, ShapeMismatchError, SimplexOptions
from gpmix.numkit import (
    LsqSystem,
    eig_general,
    lm_minimize,
    lstsq,
    nnls,
    nnls_kkt_residual,
    numeric_rank,
    project_simplex,
    simplex_minimize,
)


def test_lstsq_solves_consistent_systems():
    A = np.array([[2.0, 1.0], [1.0, 3.0], [0.0, 1.0]])
    x = np.array([0.5, -1.5])
    result = lstsq(LsqSystem(A, A @ x))
    assert_allclose(result.x, x, atol=1e-12)
    assert result.rank == 2
    assert not result.rank_deficient


def test_lstsq_flags_rank_deficiency():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    result = lstsq(LsqSystem(A, np.array([1.0, 2.0, 3.0])))
    assert result.rank_deficient
    assert_allclose(A @ result.x, [1.0, 2.0, 3.0], atol=1e-10)


def test_system_shapes_are_checked():
    with pytest.raises(ShapeMismatchError):
        LsqSystem(np.ones((3, 2)), np.ones(2))


def test_nnls_satisfies_kkt():
    generator = np.random.default_rng(1)
    system = LsqSystem(generator.standard_normal((12, 5)), generator.standard_normal(12))
    x = nnls(system)
    assert np.all(x >= 0)
    assert nnls_kkt_residual(system, x) <= 1e-10


def test_nnls_rejects_complex_systems():
    with pytest.raises(TypeError):
        nnls(LsqSystem(np.ones((2, 2)) * 1j, np.ones(2)))


def test_eig_general_sorts_and_normalizes_phase():
    matrix = np.array([[2.0, 1.0], [0.0, -1.0]])
    result = eig_general(matrix)
    assert_allclose(result.values, [-1.0, 2.0], atol=1e-12)
    for pair in result.pairs:
        assert_allclose(matrix @ pair.vector, pair.value * pair.vector, atol=1e-12)
        assert np.linalg.norm(pair.vector) == pytest.approx(1.0)
        pivot = pair.vector[np.argmax(np.abs(pair.vector))]
        assert pivot.imag == pytest.approx(0.0, abs=1e-15)
        assert pivot.real > 0
    assert not result.defective


def test_eig_general_handles_complex_pairs():
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    result = eig_general(rotation)
    assert_allclose(result.values, [-1j, 1j], atol=1e-12)


def test_numeric_rank():
    generator = np.random.default_rng(2)
    matrix = generator.standard_normal((6, 2)) @ generator.standard_normal((2, 5))
    estimate = numeric_rank(matrix)
    assert estimate.rank == 2
    assert estimate.gap_rank == 2
    assert int(estimate) == 2
    assert numeric_rank(np.zeros((3, 3))).rank == 0


def rosenbrock(x):
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def rosenbrock_jacobian(x):
    return np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]])


def test_lm_minimize_reaches_the_minimum():
    result = lm_minimize(rosenbrock, rosenbrock_jacobian, [-1.2, 1.0])
    assert result.converged
    assert_allclose(result.x, [1.0, 1.0], atol=1e-6)
    assert result.objective <= result.initial_objective
    assert all(later <= earlier for earlier, later in zip(result.trace, result.trace[1:]))


def test_lm_minimize_respects_iteration_cap():
    result = lm_minimize(rosenbrock, rosenbrock_jacobian, [-1.2, 1.0], LmOptions(max_iter=2))
    assert result.iterations <= 2


def test_lm_minimize_rejects_non_finite_start():
    with pytest.raises(NonFiniteInputError):
        lm_minimize(lambda x: np.array([np.nan]), lambda x: np.ones((1, 1)), [0.0])


def test_project_simplex():
    projected = project_simplex([0.8, 0.6, -0.3])
    assert projected.sum() == pytest.approx(1.0)
    assert np.all(projected >= 0)
    assert_allclose(projected, [0.6, 0.4, 0.0], atol=1e-12)
    assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5], atol=1e-15)


def test_simplex_minimize_quadratic():
    target = np.array([0.7, 0.5, -0.2, 1.5])

    def objective(x):
        return float(np.sum((x - target) ** 2))

    def gradient(x):
        return 2.0 * (x - target)

    result = simplex_minimize(objective, gradient, [0.5, 0.5, 0.0, 0.0], 3)
    assert result.converged
    assert_allclose(result.x[:3], [0.6, 0.4, 0.0], atol=1e-6)
    assert result.x[3] == pytest.approx(1.5, abs=1e-6)
    assert not result.projected_start


def test_simplex_minimize_projects_infeasible_start():
    result = simplex_minimize(lambda x: float(x @ x), lambda x: 2.0 * x, [2.0, 0.0], 2)
    assert result.projected_start
    assert_allclose(result.x, [0.5, 0.5], atol=1e-6)


@pytest.mark.parametrize('seed', range(5))
def test_nnls_recovers_nonnegative_solutions(seed):
    generator = np.random.default_rng(seed)
    A = generator.standard_normal((8, 3))
    x = generator.uniform(0.0, 2.0, 3)
    x[seed % 3] = 0.0
    assert_allclose(nnls(LsqSystem(A, A @ x)), x, atol=1e-8)


def test_nnls_clamps_and_keeps_interior_solutions():
    assert_allclose(nnls(LsqSystem(np.eye(2), np.array([1.0, -1.0]))), [1.0, 0.0])
    assert_allclose(nnls(LsqSystem(np.eye(2), np.array([2.0, 3.0]))), [2.0, 3.0])


def test_eig_general_reconstructs_the_matrix():
    generator = np.random.default_rng(3)
    vectors = generator.standard_normal((5, 5))
    matrix = vectors @ np.diag(generator.standard_normal(5)) @ np.linalg.inv(vectors)
    result = eig_general(matrix)
    rebuilt = result.vectors @ np.diag(result.values) @ np.linalg.inv(result.vectors)
    assert np.linalg.norm(rebuilt - matrix) <= 1e-8 * np.linalg.norm(matrix)
    for pair in result.pairs:
        assert np.linalg.norm(matrix @ pair.vector - pair.value * pair.vector) <= 1e-10 * np.linalg.norm(matrix)


def test_lm_minimize_on_a_linear_residual():
    generator = np.random.default_rng(4)
    A = generator.standard_normal((10, 4))
    b = generator.standard_normal(10)
    result = lm_minimize(lambda x: A @ x - b, lambda x: A, np.zeros(4))
    assert_allclose(result.x, lstsq(LsqSystem(A, b)).x, atol=1e-8)


def test_lm_minimize_finds_a_scalar_root():
    result = lm_minimize(lambda x: np.array([x[0] ** 2 - 4.0]), lambda x: np.array([[2.0 * x[0]]]), [3.0])
    assert result.x[0] == pytest.approx(2.0, abs=1e-8)


def test_simplex_minimize_constant_objective():
    start = np.array([0.2, 0.5, 0.3, -1.0])
    result = simplex_minimize(lambda x: 5.0, lambda x: np.zeros_like(x), start, 3)
    assert result.converged
    assert result.iterations == 0
    assert_allclose(result.x, start)


def test_simplex_minimize_matches_grid_search():
    generator = np.random.default_rng(5)
    root = generator.standard_normal((3, 3))
    H = root @ root.T + 0.1 * np.eye(3)
    target = generator.standard_normal(3)

    def objective(w):
        return float((w - target) @ H @ (w - target))

    def gradient(w):
        return 2.0 * H @ (w - target)

    result = simplex_minimize(objective, gradient, np.full(3, 1.0 / 3.0), 3, SimplexOptions(max_iter=5000, pgtol=1e-10))
    steps = np.arange(0, 1001) / 1000
    a, b = np.meshgrid(steps, steps, indexing='ij')
    grid = np.stack([a, b, 1.0 - a - b], axis=-1)[a + b <= 1.0 + 1e-12]
    values = np.einsum('ni,ij,nj->n', grid - target, H, grid - target)
    assert result.objective <= values.min() + 1e-12
    assert values.min() - result.objective <= 1e-3
    assert result.x.sum() == pytest.approx(1.0, abs=1e-12)
