import csv
import io
import math
import pathlib

import numpy as np

from ..definition.errors import ParseError


def _row(fields: list[str], line: int) -> list[float] | None:
    try:
        values = [float(field) for field in fields]
    except ValueError:
        return None
    if not all(math.isfinite(value) for value in values):
        raise ParseError('non-finite sample value', line)
    return values


def loads(text: str) -> np.ndarray:
    """One sample per row; a first row that is not numeric is taken as a header."""
    rows: list[list[float]] = []
    width = None
    for index, fields in enumerate(csv.reader(io.StringIO(text))):
        line = index + 1
        if not fields or all(not field.strip() for field in fields):
            continue
        values = _row(fields, line)
        if values is None:
            if index == 0:
                continue
            raise ParseError(f'non-numeric field in {",".join(fields)!r}', line)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f'expected {width} columns, got {len(values)}', line)
        rows.append(values)
    if not rows:
        raise ParseError('no samples', 1)
    return np.array(rows, dtype=np.float64)


def load(path: pathlib.Path | str) -> np.ndarray:
    return loads(pathlib.Path(path).read_text(encoding='utf-8'))


def dumps(samples: np.ndarray, header: bool = False) -> str:
    samples = np.atleast_2d(samples)
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    if header:
        writer.writerow([f'y{j}' for j in range(samples.shape[1])])
    for row in samples.tolist():
        writer.writerow([repr(value) for value in row])
    return stream.getvalue()
