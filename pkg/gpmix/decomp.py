import dataclasses
import logging
import typing

import numpy as np
import scipy.optimize

from .assembling import (
    GeneratingMatrix,
    check_rank_bound,
    solve_generating_matrix,
)
from .bootstraping import get_generator
from .configuration import (
    DEGENERACY_TOL,
    EIGEN_GAP_TOL,
    EXACT_RESIDUAL_TOL,
    POLISH_LIMIT,
    POLISH_LM,
    POLISH_TOL,
    RANK_TOL,
    REAL_FACTOR_TOL,
    LmOptions,
    ProjectionConfig,
)
from .definition import contracts
from .definition.errors import (
    DegenerateComponentError,
    InvalidViewError,
    RepeatedEigenvalueError,
)
from .numkit import (
    LsqSystem,
    eig_general,
    lm_minimize,
    lstsq,
    numeric_rank,
)
from .symtensor import (
    OmegaTensor,
    distinct_triples,
    flat_submatrix,
    omega_norm,
    omega_rank_one_sum,
)

logger = logging.getLogger(__name__)

CUBE_ROOTS_OF_UNITY = np.exp(2j * np.pi * np.arange(3) / 3)


@dataclasses.dataclass(frozen=True)
class EigenBundle:
    """Rows of `vtilde` are the unit eigenvectors, rows of `wtilde` the matching N_l eigenvalues."""
    vtilde: np.ndarray
    wtilde: np.ndarray
    values: np.ndarray
    xi: np.ndarray
    separation: float
    repeated: bool
    defective: bool
    conjugate_pairs: bool = False

    @property
    def flags(self) -> list[str]:
        checks = (
            ('repeated_eigenvalue', self.repeated),
            ('defective', self.defective),
            ('conjugate_pair', self.conjugate_pairs),
        )
        return [name for name, raised in checks if raised]


@dataclasses.dataclass(frozen=True)
class ScalarFit:
    beta: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray


@dataclasses.dataclass(frozen=True)
class Decomposition:
    r: int
    vectors: np.ndarray
    omega_residual: float
    unrefined_residual: float
    lam: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def tensor(self) -> OmegaTensor:
        return reconstruct(self.vectors)

    def diagnostics(self) -> contracts.DecompositionDiagnostics:
        return contracts.DecompositionDiagnostics(
            omega_residual=self.omega_residual,
            unrefined_residual=self.unrefined_residual,
            xi=[float(v) for v in self.xi],
            flags=list(self.flags),
        )


@dataclasses.dataclass(frozen=True)
class FactorAlignment:
    order: np.ndarray
    taus: np.ndarray
    errors: np.ndarray

    @property
    def max_error(self) -> float:
        return float(self.errors.max(initial=0.0))


def reconstruct(factors: typing.Any) -> OmegaTensor:
    vectors = factors.vectors if isinstance(factors, Decomposition) else np.atleast_2d(np.asarray(factors))
    return omega_rank_one_sum(np.ones(len(vectors)), vectors)


def xi_candidates(length: int, seed: int, count: int) -> np.ndarray:
    generator = get_generator(seed)
    return np.array([generator.uniform(-1.0, 1.0, length) for _ in range(count)]).reshape(count, length)


def draw_xi(length: int, seed: int) -> np.ndarray:
    return xi_candidates(length, seed, 1)[0]


def n_stack(matrix: GeneratingMatrix) -> np.ndarray:
    """All N_l(G), l = r + 1..n, stacked along the first axis."""
    return matrix.columns.transpose(1, 0, 2)


def joint_eigen(matrix: GeneratingMatrix, config: ProjectionConfig | np.ndarray) -> EigenBundle:
    if isinstance(config, ProjectionConfig):
        xi = np.asarray(config.xi, dtype=np.float64) if config.xi is not None else draw_xi(matrix.n - matrix.r, config.seed)
    else:
        xi = np.asarray(config, dtype=np.float64)
    if xi.shape != (matrix.n - matrix.r,):
        raise InvalidViewError(f'xi must have length n - r = {matrix.n - matrix.r}, got {xi.shape}')
    stack = n_stack(matrix)
    combined = np.tensordot(xi, stack, axes=1)
    scale = np.linalg.norm(combined)
    eigen = eig_general(combined)
    vtilde = eigen.vectors.T
    wtilde = np.einsum('ka,lab,kb->kl', vtilde.conj(), stack, vtilde)
    gaps = np.abs(eigen.values[:, None] - eigen.values[None, :])[~np.eye(matrix.r, dtype=bool)]
    separation = float(gaps.min() / scale) if gaps.size and scale > 0 else np.inf
    repeated = bool(gaps.size and gaps.min() < EIGEN_GAP_TOL * scale)
    if repeated:
        logger.warning(f'N(xi) has eigenvalues closer than {EIGEN_GAP_TOL:g} relative to its norm')
    # a real N(xi) with non-real eigenvalues pairs them with their conjugates
    conjugate_pairs = not np.iscomplexobj(stack) and bool(np.any(np.abs(eigen.values.imag) > EIGEN_GAP_TOL * scale))
    return EigenBundle(
        vtilde=vtilde,
        wtilde=wtilde,
        values=eigen.values,
        xi=xi,
        separation=separation,
        repeated=repeated,
        defective=eigen.defective,
        conjugate_pairs=conjugate_pairs,
    )


def select_eigen(matrix: GeneratingMatrix, config: ProjectionConfig) -> EigenBundle:
    """
    Joint eigenstructure for a given xi, or for the best of `config.candidates`
    seeded draws: real spectra first when N(xi) is real, then the widest
    relative eigenvalue gap.
    """
    if config.xi is not None:
        bundle = joint_eigen(matrix, config)
        if not bundle.repeated:
            return bundle
        logger.info('Given xi gives a repeated eigenvalue, drawing replacements')
    count = max(config.candidates, 1)
    bundles = [joint_eigen(matrix, xi) for xi in xi_candidates(matrix.n - matrix.r, config.seed, count)]
    best = min(bundles, key=lambda bundle: (bundle.repeated, bundle.conjugate_pairs, -bundle.separation))
    if best.repeated:
        raise RepeatedEigenvalueError(f'N(xi) has a repeated eigenvalue for all {count} draws of xi')
    logger.debug(f'select_eigen: kept separation {best.separation:.3e} out of {count} draws')
    return best


def _check_nonzero(values: np.ndarray, scale: float, name: str) -> None:
    for index, value in enumerate(values):
        if not np.isfinite(value) or abs(value) <= DEGENERACY_TOL * scale:
            raise DegenerateComponentError(f'{name} = {value} vanishes', index)


def fit_scalars(tensor: OmegaTensor, bundle: EigenBundle) -> ScalarFit:
    V, W = bundle.vtilde, bundle.wtilde
    r, m = W.shape
    n = r + m
    if numeric_rank(V.T).rank < r:
        raise RepeatedEigenvalueError('Eigenvectors of N(xi) are linearly dependent')
    scale = omega_norm(tensor)
    first = np.arange(1, r + 1)
    rest = np.arange(r + 1, n + 1)

    # J1: (0, i1, i2), i1 in [r], i2 in [r+1, n]
    i1, i2 = np.meshgrid(first, rest, indexing='ij')
    design = np.einsum('ka,kb->abk', V, W).reshape(r * m, r)
    beta = lstsq(LsqSystem(design, tensor.take(0, i1, i2).ravel())).x
    _check_nonzero(beta, scale, 'beta')

    if r >= 2:
        # J2: (i1, i2, i3), i1 < i2 in [r], i3 in [r+1, n]
        a, b = np.triu_indices(r, k=1)
        pa, pc = np.meshgrid(np.arange(len(a)), np.arange(m), indexing='ij')
        la, lb, lc = a[pa].ravel(), b[pa].ravel(), pc.ravel()
        design = (V[:, la] * V[:, lb] * W[:, lc]).T
        theta = lstsq(LsqSystem(design, tensor.take(la + 1, lb + 1, lc + r + 1))).x
        _check_nonzero(theta, scale, 'theta')
        lam = beta ** 2 / theta
        gamma = theta / beta
    else:
        # one component: lambda from (0, j, l), j < l in [2, n]
        a, b = np.triu_indices(m, k=1)
        design = (W[:, a] * W[:, b]).T
        lam = lstsq(LsqSystem(design, tensor.take(0, a + r + 1, b + r + 1))).x
        _check_nonzero(lam, scale, 'lambda')
        gamma = beta / lam
        theta = beta * gamma
    return ScalarFit(beta=beta, theta=theta, lam=lam, gamma=gamma)


def factor_vectors(fit: ScalarFit, bundle: EigenBundle) -> np.ndarray:
    r = len(fit.lam)
    roots = np.power(fit.lam.astype(np.complex128), 1.0 / 3.0)
    body = np.hstack([np.ones((r, 1)), fit.gamma[:, None] * bundle.vtilde, bundle.wtilde])
    return roots[:, None] * body


def vector_order(vectors: np.ndarray) -> np.ndarray:
    """Sort key: real then imaginary part of each entry, first entry most significant."""
    vectors = np.asarray(vectors, dtype=np.complex128)
    keys = np.empty((vectors.shape[0], 2 * vectors.shape[1]))
    keys[:, 0::2] = vectors.real
    keys[:, 1::2] = vectors.imag
    return np.lexsort(keys.T[::-1])


def order_vectors(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.complex128)
    return vectors[vector_order(vectors)]


def decompose(
    tensor: OmegaTensor,
    r: int,
    config: ProjectionConfig = ProjectionConfig(),
    workers: int = 1,
) -> Decomposition:
    check_rank_bound(tensor.d, r)
    matrix = solve_generating_matrix(tensor, r, workers)
    bundle = select_eigen(matrix, config)
    fit = fit_scalars(tensor, bundle)
    vectors = factor_vectors(fit, bundle)
    algebraic = residual = omega_norm(reconstruct(vectors) - tensor)
    scale = omega_norm(tensor)
    if POLISH_TOL * scale < residual <= POLISH_LIMIT * scale:
        vectors, residual = _polish(tensor, vectors, residual)
    order = vector_order(vectors)
    logger.info(f'decompose: d={tensor.d} r={r} omega residual {residual:.3e}')
    return Decomposition(
        r=r,
        vectors=vectors[order],
        omega_residual=residual,
        unrefined_residual=algebraic,
        lam=fit.lam[order],
        gamma=fit.gamma[order],
        xi=bundle.xi,
        flags=tuple(matrix.flags + bundle.flags),
    )


def _polish(tensor: OmegaTensor, vectors: np.ndarray, residual: float) -> tuple[np.ndarray, float]:
    """A few damped Gauss-Newton steps on a nearly exact decomposition."""
    problem = OmegaResidual(tensor, len(vectors), complex_factors=True)
    result = lm_minimize(problem, problem.jacobian, problem.pack(vectors), POLISH_LM)
    polished = problem.unpack(result.x)
    value = omega_norm(reconstruct(polished) - tensor)
    if not value < residual:
        return vectors, residual
    logger.info(f'decompose: polished omega residual {residual:.3e} -> {value:.3e}')
    return polished, value


class OmegaResidual:
    """
    Residual sqrt(6) * (sum_k q_k^3 - F)_Omega over the distinct triples, as a
    real vector. Real factors use r*d real parameters; complex factors use a
    real block followed by an imaginary block. Factors are complex whenever
    the tensor is.
    """

    def __init__(self, tensor: OmegaTensor, r: int, complex_factors: bool = False):
        self._tensor = tensor
        self._r = r
        self._d = tensor.d
        self._complex = tensor.is_complex or complex_factors
        self._triples = distinct_triples(tensor.d)
        self._scale = np.sqrt(6.0)

    def pack(self, vectors: np.ndarray) -> np.ndarray:
        if self._complex:
            return np.concatenate([vectors.real.ravel(), vectors.imag.ravel()])
        return np.asarray(vectors.real, dtype=np.float64).ravel()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        size = self._r * self._d
        if self._complex:
            return (x[:size] + 1j * x[size:]).reshape(self._r, self._d)
        return x.reshape(self._r, self._d)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        values = self._scale * (reconstruct(self.unpack(x)).values - self._tensor.values)
        if self._complex:
            return np.concatenate([values.real, values.imag])
        return values

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        Q = self.unpack(x)
        a, b, c = self._triples.T
        rows = np.arange(len(self._triples))
        J = np.zeros((len(rows), self._r * self._d), dtype=Q.dtype)
        for k in range(self._r):
            offset = k * self._d
            J[rows, offset + a] = Q[k, b] * Q[k, c]
            J[rows, offset + b] = Q[k, a] * Q[k, c]
            J[rows, offset + c] = Q[k, a] * Q[k, b]
        J *= self._scale
        if self._complex:
            return np.block([[J.real, -J.imag], [J.imag, J.real]])
        return J


def approximate(
    tensor: OmegaTensor,
    r: int,
    config: ProjectionConfig = ProjectionConfig(),
    refine: bool = True,
    lm: LmOptions = LmOptions(),
    workers: int = 1,
) -> Decomposition:
    base = decompose(tensor, r, config, workers)
    if not refine or base.omega_residual <= EXACT_RESIDUAL_TOL * omega_norm(tensor):
        return base
    complex_factors = tensor.is_complex or 'conjugate_pair' in base.flags
    if complex_factors and not tensor.is_complex:
        # taking real parts would collapse each conjugate pair onto one factor
        logger.warning('approximate: conjugate factor pair in a real tensor, refining over complex factors')
    problem = OmegaResidual(tensor, r, complex_factors)
    start = base.vectors if complex_factors else _real_factors(base)
    result = lm_minimize(problem, problem.jacobian, problem.pack(start), lm)
    refined = order_vectors(problem.unpack(result.x))
    residual = omega_norm(reconstruct(refined) - tensor)
    if not residual <= base.omega_residual:
        logger.warning(f'approximate: refinement did not improve the omega residual ({base.omega_residual:.3e})')
        return dataclasses.replace(base, flags=base.flags + ('lm_no_improvement',))
    logger.info(f'approximate: omega residual {base.omega_residual:.3e} -> {residual:.3e}')
    return dataclasses.replace(
        base,
        vectors=refined,
        omega_residual=residual,
        flags=base.flags + (() if result.converged else ('lm_iteration_cap',)),
    )


def _real_factors(decomposition: Decomposition) -> np.ndarray:
    """
    Real starting factors for a real tensor: each p_k = lambda^(1/3) (1, gamma v, w)
    is rescaled by the cube root of unity that makes its leading entry real.
    """
    vectors = decomposition.vectors
    turned = np.outer(CUBE_ROOTS_OF_UNITY, vectors[:, 0])
    taus = CUBE_ROOTS_OF_UNITY[np.argmin(np.abs(turned.imag), axis=0)]
    return np.real(taus[:, None] * vectors)


def nonreal_factors(vectors: typing.Any, tol: float = REAL_FACTOR_TOL) -> np.ndarray:
    """Indices of the factors that no cube root of unity turns into a real vector."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    turned = CUBE_ROOTS_OF_UNITY[:, None, None] * vectors[None, :, :]
    imaginary = np.linalg.norm(turned.imag, axis=2).min(axis=0)
    return np.flatnonzero(imaginary > tol * np.linalg.norm(vectors, axis=1))


def estimate_rank(tensor: OmegaTensor, tol: float = RANK_TOL, noise: float = 0.0) -> int:
    """
    Largest numerical rank over the two balanced flattenings of the slice at
    label 0. `noise` is the standard error of a single entry: singular values
    below noise * (sqrt(rows) + sqrt(cols)), the spectral norm a random matrix
    of that entry size and shape reaches, are not counted.
    """
    if tensor.d < 4:
        raise InvalidViewError(f'Rank estimation needs d >= 4, got d={tensor.d}')
    n = tensor.d - 1
    ranks = []
    for half in sorted({n // 2, n - n // 2}):
        view = flat_submatrix(tensor, range(1, half + 1), range(half + 1, n + 1))
        estimate = numeric_rank(view.matrix, tol)
        rows, cols = view.matrix.shape
        cutoff = noise * (np.sqrt(rows) + np.sqrt(cols))
        rank = min(estimate.rank, int(np.sum(estimate.singular_values > cutoff)))
        logger.info(f'estimate_rank: {rows}x{cols} view rank {rank} (gap {estimate.gap_rank}, noise cutoff {cutoff:.3e})')
        ranks.append(rank)
    return max(ranks)


def align_factors(estimated: typing.Any, truth: typing.Any) -> FactorAlignment:
    """
    Match estimated factors to true ones up to permutation and scaling by
    cube roots of unity; `order[k]` is the estimated row matched to truth row k.
    """
    estimated = np.atleast_2d(np.asarray(estimated, dtype=np.complex128))
    truth = np.atleast_2d(np.asarray(truth, dtype=np.complex128))
    scaled = CUBE_ROOTS_OF_UNITY[:, None, None] * estimated[None, :, :]
    distances = np.linalg.norm(scaled[:, :, None, :] - truth[None, None, :, :], axis=-1)
    best_tau = distances.argmin(axis=0)
    cost = distances.min(axis=0)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    order = np.empty(len(truth), dtype=np.intp)
    order[cols] = rows
    taus = CUBE_ROOTS_OF_UNITY[best_tau[order, np.arange(len(truth))]]
    errors = cost[order, np.arange(len(truth))]
    return FactorAlignment(order=order, taus=taus, errors=errors)
