import argparse
import json
import logging
import pathlib
import sys
import typing

import numpy as np
import pydantic

from .assembling import check_rank_bound
from .bootstraping import configure_logging
from .configuration import RANK_TOL, FitOptions, ProjectionConfig
from .decomp import approximate, estimate_rank, reconstruct
from .definition import contracts
from .gmm import classify, fit_moments, realify, sample_moments
from .simulate import run_table1, run_table2, write_report_csv
from .types import ist3, jsonb, samples

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class CliConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True, extra='forbid')

    command: typing.Literal['decompose', 'learn', 'rank', 'bench', 'score']
    input: pathlib.Path | None = None
    model: pathlib.Path | None = None
    out: pathlib.Path | None = None
    reconstruct: pathlib.Path | None = None
    table: typing.Literal[1, 2] | None = None
    d: int | None = pydantic.Field(default=None, ge=4)
    r: int | None = pydantic.Field(default=None, ge=1)
    eps: float = pydantic.Field(default=0.1, ge=0.0)
    samples: int = pydantic.Field(default=10000, ge=1)
    trials: int = pydantic.Field(default=10, ge=0)
    seed: int = pydantic.Field(default=0, ge=0)
    tol: float = pydantic.Field(default=RANK_TOL, gt=0.0, lt=1.0)
    mean_scale: float = pydantic.Field(default=1.0, gt=0.0)
    refine: bool = True
    score: contracts.ScoreMode = 'likelihood'
    threads: int = pydantic.Field(default=1, ge=1)
    debug: bool = False

    @pydantic.model_validator(mode='after')
    def check_command(self) -> typing.Self:
        required = {
            'decompose': ('input', 'r'),
            'learn': ('input',),
            'rank': ('input',),
            'bench': ('table', 'd', 'r'),
            'score': ('model', 'input'),
        }[self.command]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f'{self.command} needs --{", --".join(missing)}')
        if self.command == 'bench':
            check_rank_bound(typing.cast(int, self.d), typing.cast(int, self.r))
        return self

    def fit_options(self) -> FitOptions:
        return FitOptions(
            projection=ProjectionConfig(seed=self.seed),
            refine=self.refine,
            workers=self.threads,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gpmix',
        description='Incomplete symmetric tensor decomposition and moment-based learning of diagonal Gaussian mixtures',
    )
    parser.add_argument('--debug', action='store_true', help='log progress to stderr')
    commands = parser.add_subparsers(dest='command', required=True)

    decompose = commands.add_parser('decompose', help='decompose an Omega tensor file')
    decompose.add_argument('input', type=pathlib.Path)
    decompose.add_argument('--r', type=int, required=True)
    decompose.add_argument('--reconstruct', type=pathlib.Path, help='write the reconstructed Omega tensor here')

    learn = commands.add_parser('learn', help='learn a diagonal Gaussian mixture from a samples CSV')
    learn.add_argument('input', type=pathlib.Path)
    learn.add_argument('--r', type=int, help='component count; estimated from the data when omitted')
    learn.add_argument('--tol', type=float, default=RANK_TOL)

    rank = commands.add_parser('rank', help='estimate the rank of an Omega tensor file')
    rank.add_argument('input', type=pathlib.Path)
    rank.add_argument('--tol', type=float, default=RANK_TOL)

    bench = commands.add_parser('bench', help='reproduce the simulation tables at desk scale')
    bench.add_argument('--table', type=int, choices=(1, 2), required=True)
    bench.add_argument('--d', type=int, required=True)
    bench.add_argument('--r', type=int, required=True)
    bench.add_argument('--eps', type=float, default=0.1)
    bench.add_argument('--samples', type=int, default=10000)
    bench.add_argument('--trials', type=int, default=10)
    bench.add_argument('--mean-scale', dest='mean_scale', type=float, default=1.0)
    bench.add_argument('--score', choices=('likelihood', 'posterior'), default='likelihood')

    score = commands.add_parser('score', help='label samples with a learned mixture')
    score.add_argument('model', type=pathlib.Path)
    score.add_argument('input', type=pathlib.Path)
    score.add_argument('--score', choices=('likelihood', 'posterior'), default='likelihood')

    for command in (decompose, learn, bench):
        command.add_argument('--seed', type=int, default=0)
        command.add_argument('--no-refine', dest='refine', action='store_false')
    for command in (learn, bench):
        command.add_argument('--threads', type=int, default=1)
    for command in (decompose, learn, rank, bench, score):
        command.add_argument('--out', type=pathlib.Path)
    return parser


def _emit(text: str, out: pathlib.Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding='utf-8', newline='\n')


def cmd_decompose(config: CliConfig) -> list[str]:
    tensor = ist3.load(typing.cast(pathlib.Path, config.input))
    r = typing.cast(int, config.r)
    decomposition = approximate(tensor, r, ProjectionConfig(seed=config.seed), config.refine)
    document = {
        'd': tensor.d,
        'r': r,
        'field': tensor.field,
        'vectors': decomposition.vectors,
        'realified': np.array([realify(p) for p in decomposition.vectors]),
        'lambda': decomposition.lam,
        'gamma': decomposition.gamma,
        'diagnostics': decomposition.diagnostics(),
    }
    if config.reconstruct is not None:
        ist3.dump(reconstruct(decomposition), config.reconstruct)
    _emit(jsonb.dumps(document), config.out)
    return list(decomposition.flags)


def cmd_learn(config: CliConfig) -> list[str]:
    data = samples.load(typing.cast(pathlib.Path, config.input))
    moments = sample_moments(data, config.threads)
    r = config.r
    if r is None:
        r = estimate_rank(moments.omega(), config.tol, moments.noise)
        logger.info(f'learn: estimated r={r}')
    result = fit_moments(moments, r, config.fit_options())
    document = {
        'd': result.params.d,
        'r': result.params.r,
        'r_estimated': config.r is None,
        'weights': result.params.weights,
        'means': result.params.means,
        'diag_covs': result.params.diag_covs,
        'diagnostics': result.diagnostics,
    }
    _emit(jsonb.dumps(document), config.out)
    return list(result.flags)


def cmd_rank(config: CliConfig) -> list[str]:
    tensor = ist3.load(typing.cast(pathlib.Path, config.input))
    _emit(f'{estimate_rank(tensor, config.tol)}\n', config.out)
    return []


def cmd_bench(config: CliConfig) -> list[str]:
    d, r = typing.cast(int, config.d), typing.cast(int, config.r)
    if config.table == 1:
        report = run_table1(d, r, config.eps, config.trials, config.seed, config.threads, config.refine)
    else:
        report = run_table2(
            d, r, config.samples, config.trials, config.seed,
            config.mean_scale, config.score, config.threads, config.fit_options(),
        )
    summary = jsonb.dumps(report.summary())
    if config.out is None:
        sys.stdout.write(summary)
    else:
        write_report_csv(report, config.out.with_suffix('.csv'))
        config.out.with_suffix('.json').write_text(summary, encoding='utf-8', newline='\n')
    return ['trial_failures'] if report.failures else []


def cmd_score(config: CliConfig) -> list[str]:
    with open(typing.cast(pathlib.Path, config.model), encoding='utf-8') as stream:
        params = jsonb.decode_params(json.load(stream))
    labels = classify(params, samples.load(typing.cast(pathlib.Path, config.input)), config.score)
    _emit(''.join(f'{label}\n' for label in labels.tolist()), config.out)
    return []


COMMANDS: dict[str, typing.Callable[[CliConfig], list[str]]] = {
    'decompose': cmd_decompose,
    'learn': cmd_learn,
    'rank': cmd_rank,
    'bench': cmd_bench,
    'score': cmd_score,
}


def main(argv: typing.Sequence[str] | None = None) -> int:
    arguments = build_parser().parse_args(argv)
    try:
        config = CliConfig(**vars(arguments))
    except pydantic.ValidationError as error:
        sys.stderr.write(f'error: {error}\n')
        return EXIT_INPUT
    configure_logging(config.debug, 'DEBUG' if config.debug else 'INFO')
    try:
        flags = COMMANDS[config.command](config)
    except (ValueError, OSError, json.JSONDecodeError) as error:
        sys.stderr.write(f'error: {error}\n')
        return EXIT_INPUT
    except ArithmeticError as error:
        sys.stderr.write(f'numerical failure: {error}\n')
        return EXIT_NUMERICAL
    if flags:
        sys.stderr.write(f'warning: {", ".join(sorted(set(flags)))}\n')
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
