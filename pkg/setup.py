"""Setup for the decoding-dynamics package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from setuptools import setup

doc_reqs = [
    "myst_parser",
    "sphinx",
    "sphinx-click",
]

# Requirements for tests
test_reqs = [
    "dir-content-diff>=1.12",
    "hypothesis>=6.50",
    "pytest>=6.2",
    "pytest-click>=1.1",
    "pytest-console-scripts>=1.4",
    "pytest-cov>=4.1",
    "pytest-html>=3.2",
]

setup(
    extras_require={
        "docs": doc_reqs,
        "test": test_reqs,
    },
)
