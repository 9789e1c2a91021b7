import csv
import dataclasses
import logging
import math
import pathlib
import time
import typing

import numpy as np

from .assembling import check_rank_bound
from .bootstraping import get_generator, ordered_map
from .configuration import FitOptions, LmOptions, ProjectionConfig
from .decomp import approximate, reconstruct
from .definition import contracts
from .definition.errors import GpmixError
from .gmm import GmmParams, align_components, classify, fit
from .symtensor import OmegaTensor, omega_norm, omega_rank_one_sum

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ('trial', 'rel_error', 'abs_error', 'accuracy', 'seconds')


@dataclasses.dataclass(frozen=True)
class TensorTrial:
    exact: OmegaTensor
    perturbed: OmegaTensor
    factors: np.ndarray


@dataclasses.dataclass(frozen=True)
class SynthInstance:
    params: GmmParams
    labels: np.ndarray
    samples: np.ndarray
    seed: int

    @property
    def r(self) -> int:
        return self.params.r


@dataclasses.dataclass(frozen=True)
class TrialReport:
    trial: int
    rel_error: float = math.nan
    abs_error: float = math.nan
    accuracy: float = math.nan
    seconds: float = 0.0
    failure: str | None = None

    def row(self) -> dict[str, typing.Any]:
        return {name: getattr(self, name) for name in REPORT_COLUMNS}


@dataclasses.dataclass(frozen=True)
class TableReport:
    table: int
    d: int
    r: int
    setting: dict[str, typing.Any]
    trials: tuple[TrialReport, ...]

    @property
    def failures(self) -> int:
        return sum(trial.failure is not None for trial in self.trials)

    def summary(self) -> dict[str, typing.Any]:
        columns = ('rel_error', 'abs_error') if self.table == 1 else ('accuracy',)
        result: dict[str, typing.Any] = {
            'table': self.table,
            'd': self.d,
            'r': self.r,
            **self.setting,
            'trials': len(self.trials),
            'failures': self.failures,
        }
        succeeded = [trial for trial in self.trials if trial.failure is None]
        for column in columns:
            values = np.array([getattr(trial, column) for trial in succeeded], dtype=np.float64)
            values = values[np.isfinite(values)]
            result[column] = {
                'min': float(values.min()) if values.size else None,
                'mean': float(values.mean()) if values.size else None,
                'max': float(values.max()) if values.size else None,
            }
        seconds = [trial.seconds for trial in succeeded]
        result['seconds'] = {'mean': float(np.mean(seconds)) if seconds else None}
        return result


def gen_tensor_trial(d: int, r: int, eps: float, seed: int) -> TensorTrial:
    check_rank_bound(d, r)
    generator = get_generator(seed)
    factors = generator.standard_normal((r, d))
    exact = omega_rank_one_sum(np.ones(r), factors)
    direction = generator.standard_normal(exact.values.shape)
    if eps == 0:
        return TensorTrial(exact=exact, perturbed=OmegaTensor(d, exact.values), factors=factors)
    noise = OmegaTensor(d, direction)
    perturbed = exact + (eps / omega_norm(noise)) * noise
    return TensorTrial(exact=exact, perturbed=perturbed, factors=factors)


def tensor_errors(trial: TensorTrial, approximation: OmegaTensor) -> tuple[float, float]:
    """Relative error against the perturbed tensor and absolute error against the exact one."""
    noise = omega_norm(trial.exact - trial.perturbed)
    relative = omega_norm(approximation - trial.perturbed) / noise if noise > 0 else math.nan
    return relative, omega_norm(approximation - trial.exact)


def run_tensor_trial(
    d: int,
    r: int,
    eps: float,
    seed: int,
    index: int = 0,
    refine: bool = True,
    lm: LmOptions = LmOptions(),
) -> TrialReport:
    trial = gen_tensor_trial(d, r, eps, seed)
    started = time.perf_counter()
    try:
        decomposition = approximate(trial.perturbed, r, ProjectionConfig(seed=seed), refine, lm)
    except (GpmixError, ArithmeticError, np.linalg.LinAlgError) as error:
        logger.warning(f'table 1 trial {index} failed: {error}')
        return TrialReport(trial=index, failure=str(error))
    seconds = time.perf_counter() - started
    relative, absolute = tensor_errors(trial, reconstruct(decomposition))
    return TrialReport(trial=index, rel_error=relative, abs_error=absolute, seconds=seconds)


def run_table1(
    d: int,
    r: int,
    eps: float,
    trials: int,
    seed: int = 0,
    threads: int = 1,
    refine: bool = True,
) -> TableReport:
    check_rank_bound(d, r)
    reports = ordered_map(
        lambda index: run_tensor_trial(d, r, eps, seed + index, index, refine),
        range(trials),
        threads,
    )
    logger.info(f'table 1: d={d} r={r} eps={eps:g} {trials} trials')
    return TableReport(table=1, d=d, r=r, setting={'eps': eps}, trials=tuple(reports))


def gen_gmm_instance(d: int, r: int, n_samples: int, seed: int, mean_scale: float = 1.0) -> SynthInstance:
    check_rank_bound(d, r)
    generator = get_generator(seed)
    labels = generator.integers(0, r, n_samples)
    weights = np.bincount(labels, minlength=r) / n_samples
    diag_covs = generator.standard_normal((r, d)) ** 2
    means = mean_scale * generator.standard_normal((r, d))
    samples = np.empty((n_samples, d))
    for component in range(r):
        members = labels == component
        noise = generator.standard_normal((int(members.sum()), d))
        samples[members] = means[component] + np.sqrt(diag_covs[component]) * noise
    return SynthInstance(
        params=GmmParams(weights, means, diag_covs),
        labels=labels,
        samples=samples,
        seed=seed,
    )


def evaluate_fit(
    instance: SynthInstance,
    fitted: GmmParams,
    mode: contracts.ScoreMode = 'likelihood',
) -> TrialReport:
    order = align_components(fitted, instance.params)
    predicted = classify(fitted.reordered(order), instance.samples, mode)
    accuracy = float(np.mean(predicted == instance.labels))
    return TrialReport(trial=0, accuracy=accuracy)


def run_gmm_trial(
    d: int,
    r: int,
    n_samples: int,
    seed: int,
    index: int = 0,
    mean_scale: float = 1.0,
    mode: contracts.ScoreMode = 'likelihood',
    options: FitOptions = FitOptions(),
) -> TrialReport:
    instance = gen_gmm_instance(d, r, n_samples, seed, mean_scale)
    options = dataclasses.replace(options, projection=dataclasses.replace(options.projection, seed=seed))
    started = time.perf_counter()
    try:
        result = fit(instance.samples, r, options)
    except (GpmixError, ArithmeticError, np.linalg.LinAlgError) as error:
        logger.warning(f'table 2 trial {index} failed: {error}')
        return TrialReport(trial=index, failure=str(error))
    seconds = time.perf_counter() - started
    report = evaluate_fit(instance, result.params, mode)
    return dataclasses.replace(report, trial=index, seconds=seconds)


def run_table2(
    d: int,
    r: int,
    n_samples: int,
    trials: int,
    seed: int = 0,
    mean_scale: float = 1.0,
    mode: contracts.ScoreMode = 'likelihood',
    threads: int = 1,
    options: FitOptions = FitOptions(),
) -> TableReport:
    check_rank_bound(d, r)
    reports = ordered_map(
        lambda index: run_gmm_trial(d, r, n_samples, seed + index, index, mean_scale, mode, options),
        range(trials),
        threads,
    )
    logger.info(f'table 2: d={d} r={r} N={n_samples} {trials} trials')
    return TableReport(
        table=2,
        d=d,
        r=r,
        setting={'samples': n_samples, 'mean_scale': mean_scale, 'score': mode},
        trials=tuple(reports),
    )


def write_report_csv(report: TableReport, path: pathlib.Path | str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as stream:
        writer = csv.DictWriter(stream, fieldnames=REPORT_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for trial in report.trials:
            writer.writerow({key: repr(value) if isinstance(value, float) else value for key, value in trial.row().items()})
