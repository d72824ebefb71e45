import csv
import hashlib
import json
import logging
import math
from collections.abc import Iterable, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any, Final, List

import numpy as np

log: Final = logging.getLogger(__name__)


class AttributeMixin(object):
    attrs: List[str] = []

    def __str__(self) -> str:
        try:
            from qav.listpack import ListPack
        except ImportError:
            return str(self.to_tuples())
        return str(ListPack(self.to_tuples()))

    def to_tuples(self) -> list:
        return [(x, getattr(self, x)) for x in self.attrs]

    def to_dict(self) -> dict:
        return {k: jsonable(v) for k, v in self.to_tuples()}


def jsonable(value: Any) -> Any:
    '''Convert numpy scalars/arrays, complex numbers and fractions to JSON data.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    '''
    if isinstance(value, AttributeMixin):
        return value.to_dict()
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag == 0:
            return jsonable(float(value.real))
        return {'re': jsonable(float(value.real)), 'im': jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def config_digest(config: Any) -> str:
    '''SHA-256 of the canonical JSON form (sorted keys, no whitespace).'''
    canonical = json.dumps(jsonable(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def format_cell(value: Any) -> str:
    value = jsonable(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, delimiter=',', lineterminator='\n')
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
            count += 1
    log.debug('wrote %d rows to %s', count, path)
    return path


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(jsonable(payload), f, indent=2, sort_keys=True)
        f.write('\n')
    return path
