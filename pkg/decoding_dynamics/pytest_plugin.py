"""Plugin for pytest.

Register this package as a pytest plugin. When run with pytest, the
:func:`decoding_dynamics.assert_verified` function can use the following command line options of
pytest:

* ``--dd-seed`` to change the root seed of the random cases.
* ``--dd-n-cases`` to change the number of random cases of every check.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from decoding_dynamics import assert_verified


def pytest_addoption(parser):
    """Add command line options for pytest."""
    group = parser.getgroup("decoding-dynamics", "decoding-dynamics integration")
    group.addoption(
        "--dd-seed",
        type=int,
        default=None,
        help="Root seed of the random cases drawn by the property checks.",
    )
    group.addoption(
        "--dd-n-cases",
        type=int,
        default=None,
        help="Number of random cases drawn by every property check.",
    )


def pytest_configure(config):
    """Process cmdline arguments."""
    # pylint: disable=protected-access
    assert_verified._pytest_seed = config.getoption("--dd-seed")
    assert_verified._pytest_n_cases = config.getoption("--dd-n-cases")
