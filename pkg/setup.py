#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import setup


def read(fname):
    with open(fname) as f:
        return f.read()


DEPS_QA = [
    'flake8>=3.7.0',
    'flake8-isort',
]
DEPS_TESTING = [
    'hypothesis>=4.0',
    'pytest>=3.3.0',
    'pytest-mock',
]

setup(
    name='cyclicstdp',
    description=('Seeded simulator of a spiking associative memory '
                 'trained with cyclic STDP.'),
    long_description=read('README.md'),
    long_description_content_type='text/markdown',
    packages=['cyclicstdp'],
    entry_points={
        'console_scripts': ['cyclicstdp=cyclicstdp.cli:main'],
    },
    use_scm_version={
        'write_to': 'cyclicstdp/__version__.py',
        'fallback_version': '0.1.0.dev0',
    },
    setup_requires=[
        'setuptools_scm',
    ],
    python_requires='>=3.8',
    install_requires=[
        'attrs>=17.4.0',
        'click>=7.0',
        'numpy>=1.17',
    ],
    extras_require={
        'testing': DEPS_TESTING,
        'dev': DEPS_TESTING + DEPS_QA + [
            'pdbpp',
            'pytest-pdb',
        ],
        'qa': DEPS_QA,
    },
    include_package_data=True,
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering',
    ],
)
