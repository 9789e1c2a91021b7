"""
Text format of an Omega tensor:

    ist3 d=<d> field=<real|complex>
    <i> <j> <k> <re> [<im>]

one line per distinct triple with 0-based labels i < j < k.
"""
import logging
import math
import pathlib
import re

import numpy as np

from ..definition.errors import ParseError
from ..symtensor import OmegaTensor, distinct_triples

logger = logging.getLogger(__name__)

HEADER = re.compile(r'^ist3\s+d=(\d+)\s+field=(real|complex)\s*$')


def _number(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f'{token!r} is not a number', line) from None
    if not math.isfinite(value):
        raise ParseError(f'non-finite value {token!r}', line)
    return value


def _label(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f'{token!r} is not an integer label', line) from None


def loads(text: str) -> OmegaTensor:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError('missing "ist3 d=<d> field=<real|complex>" header', 1)
    header = HEADER.match(lines[0].strip())
    if header is None:
        raise ParseError(f'malformed header {lines[0].strip()!r}', 1)
    d, field = int(header.group(1)), header.group(2)
    if d < 3:
        raise ParseError(f'd={d} has no distinct triples', 1)
    triples = distinct_triples(d)
    slots = {tuple(triple): slot for slot, triple in enumerate(triples.tolist())}
    values = np.zeros(len(triples), dtype=np.complex128 if field == 'complex' else np.float64)
    seen = np.zeros(len(triples), dtype=bool)
    width = 5 if field == 'complex' else 4
    for number, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) != width:
            raise ParseError(f'expected {width} fields for a {field} tensor, got {len(tokens)}', number)
        triple = tuple(_label(token, number) for token in tokens[:3])
        if not (0 <= triple[0] < triple[1] < triple[2] < d):
            raise ParseError(f'labels {triple} are not strictly increasing within [0, {d - 1}]', number)
        slot = slots[triple]
        if seen[slot]:
            raise ParseError(f'duplicate entry for {triple}', number)
        seen[slot] = True
        value = _number(tokens[3], number)
        values[slot] = complex(value, _number(tokens[4], number)) if field == 'complex' else value
    if not seen.all():
        logger.warning(f'{int((~seen).sum())} of {len(seen)} distinct triples missing; set to 0')
    return OmegaTensor(d, values, field)


def dumps(tensor: OmegaTensor) -> str:
    lines = [f'ist3 d={tensor.d} field={tensor.field}']
    for (i, j, k), value in zip(tensor.triples().tolist(), tensor.values.tolist()):
        if tensor.is_complex:
            lines.append(f'{i} {j} {k} {value.real:.17g} {value.imag:.17g}')
        else:
            lines.append(f'{i} {j} {k} {value:.17g}')
    return '\n'.join(lines) + '\n'


def load(path: pathlib.Path | str) -> OmegaTensor:
    return loads(pathlib.Path(path).read_text(encoding='utf-8'))


def dump(tensor: OmegaTensor, path: pathlib.Path | str) -> None:
    pathlib.Path(path).write_text(dumps(tensor), encoding='utf-8', newline='\n')
