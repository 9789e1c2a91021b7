import dataclasses
import logging
import typing

import numpy as np
import scipy.linalg
import scipy.optimize

from .configuration import (
    LSTSQ_CUTOFF,
    RANK_TOL,
    LmOptions,
    SimplexOptions,
)
from .definition import contracts
from .definition.errors import NonFiniteInputError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class LsqSystem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        b = np.atleast_1d(np.asarray(self.b))
        if A.shape[0] < 1 or A.shape[1] < 1 or b.shape != (A.shape[0],):
            raise ShapeMismatchError(f'Incompatible system shapes A{A.shape}, b{b.shape}')
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'b', b)


@dataclasses.dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    rank: int
    rank_deficient: bool


@dataclasses.dataclass(frozen=True)
class EigenPair:
    value: complex
    vector: np.ndarray


@dataclasses.dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    defective: bool

    @property
    def pairs(self) -> list[EigenPair]:
        return [EigenPair(complex(v), self.vectors[:, k]) for k, v in enumerate(self.values)]


@dataclasses.dataclass(frozen=True)
class NumericRank:
    rank: int
    gap_rank: int
    singular_values: np.ndarray

    def __int__(self) -> int:
        return self.rank


@dataclasses.dataclass(frozen=True)
class LmResult:
    x: np.ndarray
    objective: float
    initial_objective: float
    gradient_norm: float
    iterations: int
    converged: bool
    trace: tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    objective: float
    initial_objective: float
    projected_gradient_norm: float
    iterations: int
    converged: bool
    projected_start: bool
    trace: tuple[float, ...]


def lstsq(system: LsqSystem, cutoff: float = LSTSQ_CUTOFF) -> LsqResult:
    x, _, rank, _ = scipy.linalg.lstsq(system.A, system.b, cond=cutoff, lapack_driver='gelsd')
    deficient = int(rank) < system.A.shape[1]
    if deficient:
        logger.warning(f'Least squares system {system.A.shape} is rank deficient (rank {rank})')
    return LsqResult(x=x, rank=int(rank), rank_deficient=deficient)


def nnls(system: LsqSystem) -> np.ndarray:
    if np.iscomplexobj(system.A) or np.iscomplexobj(system.b):
        raise TypeError('Nonnegative least squares needs a real-valued system')
    x, _ = scipy.optimize.nnls(system.A.astype(np.float64), system.b.astype(np.float64))
    return x


def nnls_kkt_residual(system: LsqSystem, x: np.ndarray) -> float:
    gradient = system.A.T @ (system.A @ x - system.b)
    free = x > 0
    return float(max(
        np.max(np.abs(gradient[free]), initial=0.0),
        np.max(-gradient[~free], initial=0.0),
    ))


def phase_normalize(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.complex128)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return vector
    vector = vector / norm
    pivot = vector[np.argmax(np.abs(vector))]
    return vector * (np.abs(pivot) / pivot)


def eig_general(matrix: typing.Any, defect_tol: float = 1e8) -> EigenDecomposition:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    values, vectors = scipy.linalg.eig(matrix)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = np.column_stack([phase_normalize(vectors[:, k]) for k in order])
    defective = bool(np.linalg.cond(vectors) > defect_tol)
    if defective:
        logger.warning(f'Eigenvector matrix of a {matrix.shape[0]}x{matrix.shape[0]} matrix is near singular')
    return EigenDecomposition(values=values, vectors=vectors, defective=defective)


def numeric_rank(matrix: typing.Any, tol: float = RANK_TOL) -> NumericRank:
    matrix = np.atleast_2d(np.asarray(matrix))
    if matrix.size == 0:
        return NumericRank(0, 0, np.zeros(0))
    s = scipy.linalg.svdvals(matrix)
    if s[0] == 0:
        return NumericRank(0, 0, s)
    rank = int(np.sum(s > tol * s[0]))
    floor = np.finfo(np.float64).tiny
    ratios = s[:-1] / np.maximum(s[1:], floor)
    gap_rank = int(np.argmax(ratios)) + 1 if len(ratios) else 1
    return NumericRank(rank, gap_rank, s)


def lm_minimize(
    residual: contracts.ResidualContract,
    jacobian: contracts.JacobianContract,
    x0: typing.Any,
    options: LmOptions = LmOptions(),
) -> LmResult:
    x = np.asarray(x0, dtype=np.float64).copy()
    fx = residual(x)
    if not np.all(np.isfinite(fx)):
        raise NonFiniteInputError('Residual is not finite at the starting point')
    objective = float(fx @ fx)
    initial = objective
    trace = [objective]
    J = jacobian(x)
    H = J.T @ J
    g = J.T @ fx
    mu = options.tau * float(np.max(np.diag(H), initial=0.0))
    if mu <= 0:
        mu = options.tau
    nu = 2.0
    converged = False
    iteration = 0
    for iteration in range(1, options.max_iter + 1):
        if np.linalg.norm(g) <= options.gtol:
            converged = True
            break
        try:
            step = scipy.linalg.solve(H + mu * np.eye(len(x)), -g, assume_a='pos')
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            mu *= nu
            nu *= 2.0
            continue
        if np.linalg.norm(step) <= options.xtol * (np.linalg.norm(x) + options.xtol):
            converged = True
            break
        candidate = x + step
        fc = residual(candidate)
        candidate_objective = float(fc @ fc) if np.all(np.isfinite(fc)) else np.inf
        predicted = float(step @ (mu * step - g))
        rho = (objective - candidate_objective) / predicted if predicted > 0 else -1.0
        accepted = rho > 0 and candidate_objective < objective
        logger.debug(f'lm: iteration {iteration} objective {objective:.6e} candidate {candidate_objective:.6e} mu {mu:.3e} accepted {accepted}')
        if accepted:
            x, fx, objective = candidate, fc, candidate_objective
            trace.append(objective)
            J = jacobian(x)
            H = J.T @ J
            g = J.T @ fx
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
        else:
            mu *= nu
            nu *= 2.0
    gradient_norm = float(np.linalg.norm(g))
    if gradient_norm <= options.gtol:
        converged = True
    logger.info(f'lm: {iteration} iterations, objective {initial:.6e} -> {objective:.6e}, gradient {gradient_norm:.3e}')
    return LmResult(
        x=x,
        objective=objective,
        initial_objective=initial,
        gradient_norm=gradient_norm,
        iterations=iteration,
        converged=converged,
        trace=tuple(trace),
    )


def project_simplex(v: typing.Any) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, len(v) + 1)
    k = index[u - cumulative / index > 0][-1]
    return np.maximum(v - cumulative[k - 1] / k, 0.0)


def _project(x: np.ndarray, n_simplex: int) -> np.ndarray:
    result = x.copy()
    result[:n_simplex] = project_simplex(x[:n_simplex])
    return result


def simplex_minimize(
    objective: contracts.ObjectiveContract,
    gradient: contracts.GradientContract,
    x0: typing.Any,
    n_simplex: int,
    options: SimplexOptions = SimplexOptions(),
) -> SimplexResult:
    """
    Projected gradient descent with Armijo backtracking over the product of
    the probability simplex (first `n_simplex` coordinates) and a free block.
    Trial steps start from the Barzilai-Borwein length of the last move.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    weights = x[:n_simplex]
    projected_start = bool(np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12)
    if projected_start:
        logger.warning('simplex: infeasible start projected onto the simplex')
        x = _project(x, n_simplex)
    f = float(objective(x))
    initial = f
    trace = [f]
    g = gradient(x)
    step = 1.0 / max(float(np.linalg.norm(g)), 1.0)
    pg_norm = float(np.linalg.norm(x - _project(x - g, n_simplex)))
    converged = pg_norm <= options.pgtol
    iteration = 0
    while not converged and iteration < options.max_iter:
        iteration += 1
        t = step
        accepted = False
        for _ in range(options.max_backtracks):
            candidate = _project(x - t * g, n_simplex)
            fc = float(objective(candidate))
            if np.isfinite(fc) and fc <= f + options.armijo * float(g @ (candidate - x)) and fc <= f:
                accepted = True
                break
            t *= options.shrink
        if not accepted or np.array_equal(candidate, x):
            logger.debug(f'simplex: line search stalled at iteration {iteration}')
            break
        s = candidate - x
        gc = gradient(candidate)
        y = gc - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else t / options.shrink
        x, f, g = candidate, fc, gc
        trace.append(f)
        pg_norm = float(np.linalg.norm(x - _project(x - g, n_simplex)))
        converged = pg_norm <= options.pgtol
        logger.debug(f'simplex: iteration {iteration} objective {f:.6e} projected gradient {pg_norm:.3e}')
    logger.info(f'simplex: {iteration} iterations, objective {initial:.6e} -> {f:.6e}, projected gradient {pg_norm:.3e}')
    return SimplexResult(
        x=x,
        objective=f,
        initial_objective=initial,
        projected_gradient_norm=pg_norm,
        iterations=iteration,
        converged=converged,
        projected_start=projected_start,
        trace=tuple(trace),
    )
