import concurrent.futures
import logging
import typing

import numpy as np


def get_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def get_executor(workers: int) -> concurrent.futures.ThreadPoolExecutor | None:
    if workers and workers > 1:
        return concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    return None


def ordered_map(
    func: typing.Callable[[typing.Any], typing.Any],
    items: typing.Iterable[typing.Any],
    workers: int = 1,
) -> list[typing.Any]:
    items = list(items)
    executor = get_executor(workers)
    if executor is None:
        return [func(item) for item in items]
    with executor:
        return list(executor.map(func, items))


def configure_logging(
    debug: bool = False,
    debug_level: typing.Literal['INFO', 'DEBUG'] = 'INFO',
) -> None:
    logging.basicConfig(
        level=debug_level if debug else 'WARNING',
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
