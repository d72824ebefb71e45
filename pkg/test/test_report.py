#!/usr/bin/env python

import logging
import math
import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

import numpy as np

from moilab.report import AttributeMixin, config_digest, format_cell, jsonable, write_csv

logging.basicConfig(level=logging.WARNING)


class Record(AttributeMixin):
    attrs = ['name', 'value']

    def __init__(self, name, value):
        self.name = name
        self.value = value


class JsonableTest(unittest.TestCase):

    def test_values(self):
        self.assertEqual(jsonable(np.float64(0.5)), 0.5)
        self.assertEqual(jsonable(np.int64(3)), 3)
        self.assertEqual(jsonable(1 + 2j), {'re': 1.0, 'im': 2.0})
        self.assertEqual(jsonable(complex(2.0, 0.0)), 2.0)
        self.assertEqual(jsonable(Fraction(1, 3)), '1/3')
        self.assertEqual(jsonable([math.inf, -math.inf, math.nan]), ['inf', '-inf', 'nan'])
        self.assertEqual(jsonable(np.eye(2)), [[1.0, 0.0], [0.0, 1.0]])

    def test_record(self):
        r = Record('a', np.float64(2.0))
        self.assertEqual(r.to_tuples(), [('name', 'a'), ('value', 2.0)])
        self.assertEqual(jsonable({'r': r}), {'r': {'name': 'a', 'value': 2.0}})


class OutputTest(unittest.TestCase):

    def test_digest_ignores_key_order(self):
        self.assertEqual(config_digest({'a': 1, 'b': [1, 2]}), config_digest({'b': [1, 2], 'a': 1}))
        self.assertNotEqual(config_digest({'a': 1}), config_digest({'a': 2}))

    def test_cells(self):
        self.assertEqual(format_cell(0.1), '0.1')
        self.assertEqual(format_cell({'b': 1, 'a': 2}), '{"a": 2, "b": 1}')

    def test_write_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(Path(tmp) / 'out' / 'table.csv', ['x', 'y'], [[1, 0.5], [2, math.nan]])
            self.assertEqual(path.read_text(encoding='utf-8'), 'x,y\n1,0.5\n2,nan\n')


if __name__ == '__main__':
    unittest.main()
