import dataclasses

LSTSQ_CUTOFF = 1e-12
RANK_TOL = 1e-6
EIGEN_GAP_TOL = 1e-8
DEGENERACY_TOL = 1e-12
VARIANCE_FLOOR = 1e-8
SIMPLEX_SUM_TOL = 1e-10
EXACT_RESIDUAL_TOL = 1e-10
POLISH_TOL = 1e-9
POLISH_LIMIT = 1e-6
REAL_FACTOR_TOL = 1e-6
CANCELLATION_BOUND = 100.0
MOMENT_MEMORY = 1 << 25


@dataclasses.dataclass(frozen=True)
class LmOptions:
    max_iter: int = 200
    gtol: float = 1e-8
    xtol: float = 1e-14
    tau: float = 1e-3


POLISH_LM = LmOptions(max_iter=20, tau=1e-8)


@dataclasses.dataclass(frozen=True)
class SimplexOptions:
    max_iter: int = 500
    pgtol: float = 1e-6
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60


@dataclasses.dataclass(frozen=True)
class ProjectionConfig:
    """
    Coefficients of the generic combination N(xi) = sum_l xi_l N_l.
    When `xi` is None the coefficients are drawn uniformly from [-1, 1]
    with a generator seeded by `seed`; `candidates` draws are compared and
    the one with the widest eigenvalue separation is kept.
    """
    xi: tuple[float, ...] | None = None
    seed: int = 0
    candidates: int = 8


@dataclasses.dataclass(frozen=True)
class FitOptions:
    projection: ProjectionConfig = dataclasses.field(default_factory=ProjectionConfig)
    lm: LmOptions = dataclasses.field(default_factory=LmOptions)
    simplex: SimplexOptions = dataclasses.field(default_factory=SimplexOptions)
    refine: bool = True
    workers: int = 1
