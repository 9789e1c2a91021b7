import dataclasses
import logging

import numpy as np

from .bootstraping import ordered_map
from .definition.errors import LabelError, RankBoundError
from .numkit import LsqSystem, lstsq
from .symtensor import OmegaTensor

logger = logging.getLogger(__name__)


def check_rank_bound(d: int, r: int) -> None:
    if r < 1 or 2 * r + 2 > d:
        raise RankBoundError(d, r)


@dataclasses.dataclass(frozen=True)
class GeneratingMatrix:
    """
    Coefficients G(k, e_i + e_j) for k, i in [1, r] and j in [r + 1, n],
    stored as `columns[i - 1, j - r - 1] = G(:, e_i + e_j)`.
    """
    r: int
    n: int
    columns: np.ndarray
    rank_deficient: np.ndarray

    def column(self, i: int, j: int) -> np.ndarray:
        return self.columns[i - 1, j - self.r - 1]

    @property
    def column_count(self) -> int:
        return self.r * (self.n - self.r)

    @property
    def flags(self) -> list[str]:
        return ['rank_deficient'] if self.rank_deficient.any() else []


def system_rows(n: int, r: int, j: int) -> list[int]:
    return [l for l in range(r + 1, n + 1) if l != j]


def build_system(tensor: OmegaTensor, r: int, i: int, j: int) -> LsqSystem:
    check_rank_bound(tensor.d, r)
    n = tensor.d - 1
    if not 1 <= i <= r or not r + 1 <= j <= n:
        raise LabelError(f'Pair (i, j)=({i}, {j}) outside [1, {r}] x [{r + 1}, {n}]')
    rows = np.array(system_rows(n, r, j), dtype=np.intp)
    ks = np.arange(1, r + 1, dtype=np.intp)
    A = tensor.take(0, ks[None, :], rows[:, None])
    b = tensor.take(i, j, rows)
    return LsqSystem(A, b)


class GeneratingMatrixBuilder:
    def __init__(self, r: int, workers: int = 1):
        self._r = r
        self._workers = workers

    def __call__(self, tensor: OmegaTensor) -> GeneratingMatrix:
        r = self._r
        check_rank_bound(tensor.d, r)
        n = tensor.d - 1
        pairs = [(i, j) for i in range(1, r + 1) for j in range(r + 1, n + 1)]
        results = ordered_map(
            lambda pair: lstsq(build_system(tensor, r, *pair)),
            pairs,
            self._workers,
        )
        return self.assemble(r, n, [result.x for result in results], [result.rank_deficient for result in results])

    @staticmethod
    def assemble(
        r: int,
        n: int,
        solutions: list[np.ndarray],
        deficient: list[bool] | None = None,
    ) -> GeneratingMatrix:
        dtype = np.result_type(*solutions) if solutions else np.float64
        columns = np.array(solutions, dtype=dtype).reshape(r, n - r, r)
        flags = np.array(deficient or [False] * len(solutions), dtype=bool).reshape(r, n - r)
        if flags.any():
            logger.warning(f'{int(flags.sum())} of {flags.size} generating-matrix columns are rank deficient')
        return GeneratingMatrix(r=r, n=n, columns=columns, rank_deficient=flags)


def solve_generating_matrix(tensor: OmegaTensor, r: int, workers: int = 1) -> GeneratingMatrix:
    return GeneratingMatrixBuilder(r, workers)(tensor)


def solve_systems(systems: dict[tuple[int, int], LsqSystem], r: int, n: int) -> GeneratingMatrix:
    """Solve externally supplied (A_ij, b_ij) systems keyed by (i, j)."""
    results = [lstsq(systems[(i, j)]) for i in range(1, r + 1) for j in range(r + 1, n + 1)]
    return GeneratingMatrixBuilder.assemble(r, n, [res.x for res in results], [res.rank_deficient for res in results])


def assemble_N(matrix: GeneratingMatrix, l: int) -> np.ndarray:
    if not matrix.r + 1 <= l <= matrix.n:
        raise LabelError(f'Label l={l} outside [{matrix.r + 1}, {matrix.n}]')
    return matrix.columns[:, l - matrix.r - 1, :]
