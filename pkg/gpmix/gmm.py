import dataclasses
import logging
import math
import typing

import numpy as np
import scipy.optimize
import scipy.spatial.distance
import scipy.stats

from .assembling import check_rank_bound
from .bootstraping import ordered_map
from .configuration import (
    CANCELLATION_BOUND,
    DEGENERACY_TOL,
    MOMENT_MEMORY,
    SIMPLEX_SUM_TOL,
    VARIANCE_FLOOR,
    FitOptions,
    SimplexOptions,
)
from .decomp import CUBE_ROOTS_OF_UNITY, Decomposition, approximate, nonreal_factors
from .definition import contracts
from .definition.errors import (
    DegenerateComponentError,
    InvalidParamsError,
    NonFiniteInputError,
    ShapeMismatchError,
)
from .numkit import LsqSystem, nnls, numeric_rank, simplex_minimize
from .symtensor import (
    OmegaTensor,
    SymTensor3,
    distinct_triples,
    from_rank_one_sum,
    multiset_triples,
    omega_extract,
    omega_norm,
    omega_rank_one_sum,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class MomentPair:
    """
    First and third moments; `n_samples` is 0 for moments computed from parameters.
    `noise` is the standard error of a third-moment entry on Omega, averaged over Omega.
    """
    m1: np.ndarray
    m3: SymTensor3
    n_samples: int
    noise: float = 0.0

    @property
    def d(self) -> int:
        return self.m3.d

    def omega(self) -> OmegaTensor:
        return omega_extract(self.m3)


@dataclasses.dataclass(frozen=True)
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    diag_covs: np.ndarray

    def __post_init__(self):
        weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        covs = np.atleast_2d(np.asarray(self.diag_covs, dtype=np.float64))
        if weights.ndim != 1 or means.shape != (len(weights), means.shape[1]) or covs.shape != means.shape:
            raise ShapeMismatchError(
                f'Inconsistent mixture shapes: weights {weights.shape}, means {means.shape}, diag_covs {covs.shape}'
            )
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(means)) and np.all(np.isfinite(covs))):
            raise NonFiniteInputError('Mixture parameters must be finite')
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > SIMPLEX_SUM_TOL:
            raise InvalidParamsError(f'Weights {weights.tolist()} are not on the probability simplex')
        if np.any(covs < 0):
            raise InvalidParamsError('Diagonal covariances must be nonnegative')
        for name, value in (('weights', weights), ('means', means), ('diag_covs', covs)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def r(self) -> int:
        return len(self.weights)

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def reordered(self, order: typing.Sequence[int] | np.ndarray) -> 'GmmParams':
        order = np.asarray(order, dtype=np.intp)
        return GmmParams(self.weights[order], self.means[order], self.diag_covs[order])


@dataclasses.dataclass(frozen=True)
class RefineResult:
    weights: np.ndarray
    means: np.ndarray
    objective: float
    initial_objective: float
    flags: tuple[str, ...] = ()


@dataclasses.dataclass(frozen=True)
class FitResult:
    params: GmmParams
    decomposition: Decomposition
    diagnostics: contracts.FitDiagnostics

    @property
    def flags(self) -> list[str]:
        return self.diagnostics['flags']


def _as_samples(samples: typing.Any) -> np.ndarray:
    Y = np.asarray(samples, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ShapeMismatchError(f'Expected an N x d sample matrix with N >= 1, got shape {Y.shape}')
    if not np.all(np.isfinite(Y)):
        row = int(np.argwhere(~np.isfinite(Y))[0, 0])
        raise NonFiniteInputError(f'Sample {row} has non-finite entries')
    return Y


def moment_chunk_rows(d: int) -> int:
    """Rows per chunk so that the few chunk-by-triples products stay within MOMENT_MEMORY."""
    return max(1, MOMENT_MEMORY // (32 * math.comb(d + 2, 3)))


def _chunk_sums(chunk: np.ndarray, I: np.ndarray, J: np.ndarray, K: np.ndarray) -> tuple[np.ndarray, float]:
    products = chunk[:, I] * chunk[:, J]
    products *= chunk[:, K]
    # elementary symmetric e3 of the squares, from power sums
    squares = chunk ** 2
    p1, p2, p3 = squares.sum(axis=1), (squares ** 2).sum(axis=1), (squares ** 3).sum(axis=1)
    e3 = (p1 ** 3 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0
    return products.sum(axis=0), float(e3.sum())


def sample_moments(samples: typing.Any, workers: int = 1) -> MomentPair:
    Y = _as_samples(samples)
    n_samples, d = Y.shape
    if d < 4:
        raise ShapeMismatchError(f'Samples need d >= 4 coordinates, got d={d}')
    I, J, K = multiset_triples(d).T
    rows = moment_chunk_rows(d)
    chunks = [Y[start:start + rows] for start in range(0, n_samples, rows)]
    partials = ordered_map(lambda chunk: _chunk_sums(chunk, I, J, K), chunks, workers)
    total = np.zeros(len(I))
    sixth = 0.0
    for products, e3 in partials:
        total += products
        sixth += e3
    m3 = SymTensor3(d, total / n_samples)
    # mean over Omega of E[(y_i y_j y_k)^2] - E[y_i y_j y_k]^2
    spread = sixth / n_samples / math.comb(d, 3) - float(np.mean(omega_extract(m3).values ** 2))
    noise = math.sqrt(max(spread, 0.0) / n_samples)
    logger.info(f'sample_moments: {n_samples} samples of dimension {d} in {len(chunks)} chunks, entry noise {noise:.3e}')
    return MomentPair(m1=Y.mean(axis=0), m3=m3, n_samples=n_samples, noise=noise)


def mixing_vectors(params: GmmParams) -> np.ndarray:
    """Row j is a_j = sum_i w_i sigma_ij^2 mu_i."""
    return np.einsum('i,ij,ik->jk', params.weights, params.diag_covs, params.means)


def exact_moments(params: GmmParams) -> MomentPair:
    d = params.d
    T = from_rank_one_sum(params.weights, params.means).dense()
    a = mixing_vectors(params)
    labels = np.arange(d)
    T[:, labels, labels] += a.T
    T[labels, :, labels] += a
    T[labels, labels, :] += a
    return MomentPair(m1=params.weights @ params.means, m3=SymTensor3.from_dense(T), n_samples=0)


def realify(p: typing.Any) -> np.ndarray:
    p = np.asarray(p, dtype=np.complex128)
    turned = CUBE_ROOTS_OF_UNITY[:, None] * p[None, :]
    imaginary = np.linalg.norm(turned.imag, axis=1)
    # first root within rounding of the minimum, so exact ties keep tau = 1
    best = int(np.flatnonzero(imaginary <= imaginary.min() * (1 + 1e-12))[0])
    return turned[best].real.copy()


def recover_weights(m1: typing.Any, q: typing.Any) -> tuple[np.ndarray, np.ndarray]:
    m1 = np.asarray(m1, dtype=np.float64)
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if numeric_rank(q).rank < len(q):
        logger.warning('recover_weights: realified factors are linearly dependent')
    beta = nnls(LsqSystem(q.T, m1))
    scale = max(float(beta.max(initial=0.0)), 1.0)
    for index, value in enumerate(beta):
        if value <= DEGENERACY_TOL * scale:
            raise DegenerateComponentError('mean equation gives a zero weight', index)
    weights = beta ** 1.5
    means = q / np.sqrt(beta)[:, None]
    return weights, means


class MomentObjective:
    """
    ||sum_i w_i mu_i - m1||^2 + ||sum_i w_i (mu_i^3)_Omega - F_Omega||_Omega^2
    over x = (w, vec(mu)).
    """

    def __init__(self, m1: np.ndarray, omega: OmegaTensor):
        self._m1 = np.asarray(m1, dtype=np.float64)
        self._omega = omega
        self._triples = distinct_triples(omega.d)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self._omega.d
        r = len(x) // (d + 1)
        return x[:r], x[r:].reshape(r, d)

    def _residuals(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        weights, means = self.split(x)
        first = weights @ means - self._m1
        third = omega_rank_one_sum(weights, means).values - self._omega.values
        return weights, means, first, third

    def __call__(self, x: np.ndarray) -> float:
        _, _, first, third = self._residuals(x)
        return float(first @ first + 6.0 * third @ third)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        weights, means, first, third = self._residuals(x)
        a, b, c = self._triples.T
        d = self._omega.d
        cubes = means[:, a] * means[:, b] * means[:, c]
        grad_weights = 2.0 * means @ first + 12.0 * cubes @ third
        inner = np.empty_like(means)
        for k, mu in enumerate(means):
            inner[k] = (
                np.bincount(a, weights=third * mu[b] * mu[c], minlength=d)
                + np.bincount(b, weights=third * mu[a] * mu[c], minlength=d)
                + np.bincount(c, weights=third * mu[a] * mu[b], minlength=d)
            )
        grad_means = weights[:, None] * (2.0 * first[None, :] + 12.0 * inner)
        return np.concatenate([grad_weights, grad_means.ravel()])


def joint_refine(
    m1: typing.Any,
    omega: OmegaTensor,
    weights: typing.Any,
    means: typing.Any,
    options: SimplexOptions = SimplexOptions(),
) -> RefineResult:
    weights = np.asarray(weights, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    objective = MomentObjective(np.asarray(m1), omega)
    x0 = np.concatenate([weights / weights.sum(), means.ravel()])
    start_weights, start_means = objective.split(x0)
    try:
        result = simplex_minimize(objective, objective.gradient, x0, len(weights), options)
    except (FloatingPointError, ArithmeticError, ValueError) as error:
        logger.warning(f'joint_refine: solver failed ({error}); keeping the start')
        value = objective(x0)
        return RefineResult(start_weights, start_means, value, value, ('refine_failed',))
    flags = ('projected_start',) if result.projected_start else ()
    if not np.all(np.isfinite(result.x)) or not result.objective <= result.initial_objective:
        logger.warning('joint_refine: objective did not decrease; keeping the start')
        return RefineResult(start_weights, start_means, result.initial_objective, result.initial_objective, flags + ('refine_failed',))
    refined_weights, refined_means = objective.split(result.x)
    return RefineResult(
        weights=refined_weights.copy(),
        means=refined_means.copy(),
        objective=result.objective,
        initial_objective=result.initial_objective,
        flags=flags,
    )


def recover_covariances(
    m3hat: SymTensor3,
    weights: typing.Any,
    means: typing.Any,
    q: typing.Any,
) -> tuple[np.ndarray, list[str]]:
    """
    Per-coordinate NNLS for the variances. An estimate below its least-squares
    standard error is raised to that error, so noisy moments never yield a
    variance the data cannot resolve; exact moments leave it untouched.
    """
    weights = np.asarray(weights, dtype=np.float64)
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    d = m3hat.d
    difference = m3hat.dense() - from_rank_one_sum(np.ones(len(q)), q).dense()
    labels = np.arange(d)
    a = difference[labels, :, labels]
    a[labels, labels] = difference[labels, labels, labels] / 3.0
    design = (weights[:, None] * means).T
    flags = []
    if numeric_rank(design).rank < len(weights):
        logger.warning('recover_covariances: weighted means are linearly dependent')
        flags.append('rank_deficient')
    covs = np.column_stack([nnls(LsqSystem(design, a[j])) for j in range(d)])
    errors = variance_errors(design, a.T - design @ covs)
    floored = covs < errors
    if np.any(floored):
        logger.info(f'recover_covariances: {int(floored.sum())} of {covs.size} variances raised to their standard error')
    return np.where(floored, errors, covs), flags


def variance_errors(design: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """
    Standard errors of the least-squares variances: column j of `residuals`
    belongs to coordinate j, row i of the result to component i.
    """
    rows, r = design.shape
    noise = np.sum(residuals ** 2, axis=0) / max(rows - r, 1)
    leverage = np.clip(np.diag(np.linalg.pinv(design.T @ design)), 0.0, None)
    return np.sqrt(np.outer(leverage, noise))


def check_components(weights: np.ndarray, means: np.ndarray, omega: OmegaTensor, n_samples: int) -> None:
    """
    Reject components the moments cannot carry: a weight worth less than one
    sample, or a third-moment term so much larger than the whole tensor that
    only cancellation between components can explain it.
    """
    min_weight = 1.0 / n_samples if n_samples else DEGENERACY_TOL
    scale = omega_norm(omega)
    for index, (weight, mean) in enumerate(zip(weights, means)):
        if weight < min_weight:
            raise DegenerateComponentError(f'weight {weight:.3e} is below {min_weight:.3e}', index)
        term = omega_norm(omega_rank_one_sum([weight], [mean]))
        if term > CANCELLATION_BOUND * scale:
            raise DegenerateComponentError(
                f'third-moment term {term:.3e} exceeds {CANCELLATION_BOUND:g} times the moment norm {scale:.3e}', index
            )


def fit_moments(moments: MomentPair, r: int, options: FitOptions = FitOptions()) -> FitResult:
    check_rank_bound(moments.d, r)
    omega = moments.omega()
    decomposition = approximate(omega, r, options.projection, options.refine, options.lm, options.workers)
    nonreal = nonreal_factors(decomposition.vectors)
    if nonreal.size:
        raise DegenerateComponentError('factor belongs to a complex conjugate pair and has no real rescaling', int(nonreal[0]))
    q = np.array([realify(p) for p in decomposition.vectors])
    weights, means = recover_weights(moments.m1, q)
    weights = weights / weights.sum()
    objective = MomentObjective(moments.m1, omega)
    flags = list(decomposition.flags)
    if options.refine:
        refined = joint_refine(moments.m1, omega, weights, means, options.simplex)
        weights, means = refined.weights, refined.means
        value = refined.objective
        flags.extend(refined.flags)
    else:
        value = objective(np.concatenate([weights, means.ravel()]))
    weights = np.maximum(weights, 0.0)
    weights = weights / weights.sum()
    check_components(weights, means, omega, moments.n_samples)
    covs, cov_flags = recover_covariances(moments.m3, weights, means, q)
    flags.extend(cov_flags)
    params = GmmParams(weights, means, covs)
    residual = omega_norm(omega_rank_one_sum(params.weights, params.means) - omega)
    logger.info(f'fit: d={moments.d} r={r} omega residual {residual:.3e} moment objective {value:.3e}')
    return FitResult(
        params=params,
        decomposition=decomposition,
        diagnostics=contracts.FitDiagnostics(omega_residual=residual, objective=value, flags=flags),
    )


def fit(samples: typing.Any, r: int, options: FitOptions = FitOptions()) -> FitResult:
    Y = _as_samples(samples)
    check_rank_bound(Y.shape[1], r)
    return fit_moments(sample_moments(Y, options.workers), r, options)


def component_log_likelihoods(params: GmmParams, samples: typing.Any) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if Y.shape[1] != params.d:
        raise ShapeMismatchError(f'Samples of dimension {Y.shape[1]} scored against a d={params.d} mixture')
    scale = np.sqrt(np.maximum(params.diag_covs, VARIANCE_FLOOR))
    return scipy.stats.norm.logpdf(Y[:, None, :], loc=params.means[None, :, :], scale=scale[None, :, :]).sum(axis=-1)


def log_density(params: GmmParams, y: typing.Any) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide='ignore'):
        log_weights = np.log(params.weights)
    result = component_log_likelihoods(params, y) + log_weights[None, :]
    return result[0] if y.ndim == 1 else result


def classify(
    params: GmmParams,
    samples: typing.Any,
    mode: contracts.ScoreMode = 'likelihood',
) -> np.ndarray:
    if mode == 'posterior':
        scores = log_density(params, np.atleast_2d(samples))
    elif mode == 'likelihood':
        scores = component_log_likelihoods(params, samples)
    else:
        raise ValueError(f'Unknown scoring mode {mode!r}')
    return np.argmax(scores, axis=1)


def align_components(fitted: GmmParams, truth: GmmParams) -> np.ndarray:
    """`order[k]` is the fitted component matched to true component k."""
    if fitted.r != truth.r or fitted.d != truth.d:
        raise ShapeMismatchError(f'Cannot align r={fitted.r}, d={fitted.d} against r={truth.r}, d={truth.d}')
    cost = scipy.spatial.distance.cdist(fitted.means, truth.means)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    order = np.empty(truth.r, dtype=np.intp)
    order[cols] = rows
    return order
