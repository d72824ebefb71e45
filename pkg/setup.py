#!/usr/bin/env python

from os import path
import ast
import re

try:
    from setuptools import setup
    extra = dict(include_package_data=True)
except ImportError:
    from distutils.core import setup
    extra = {}

BASE_DIR = path.abspath(path.dirname(__file__))
with open(path.join(BASE_DIR, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

install_requires = [
    "joblib",
    "numpy",
    "pydantic>=2",
    "pydantic-settings",
    "scipy",
]

_version_re = re.compile(r'__version__\s+=\s+(.*)')
with open('moilab/__init__.py', encoding='utf-8') as f:
    version = str(ast.literal_eval(_version_re.search(f.read()).group(1)))


setup(
    name="moilab",
    packages=["moilab"],
    package_data={"moilab": ["py.typed", "configs/*.json"]},
    zip_safe=False,
    version=version,
    install_requires=install_requires,
    extras_require={"pretty": ["qav"]},
    entry_points={"console_scripts": ["moilab=moilab.cli:main"]},
    author="moilab developers",
    license="LGPL v2.1",
    description="Numerical lab for multiple operator integrals",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords=["operator integrals", "spectral action", "heat trace", "numerics"],
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    python_requires=">=3.10",
    **extra
)
