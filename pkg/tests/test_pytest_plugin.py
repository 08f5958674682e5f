"""Test the pytest plugin."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

# pylint: disable=missing-function-docstring
# pylint: disable=redefined-outer-name
# pylint: disable=unused-argument
import pytest

from decoding_dynamics import assert_verified
from decoding_dynamics.util import DEFAULT_SEED


@pytest.fixture
def plugin_state_keeper():
    """Restore the options given to the outer pytest session."""
    seed = getattr(assert_verified, "_pytest_seed", None)
    n_cases = getattr(assert_verified, "_pytest_n_cases", None)
    yield None
    # pylint: disable=protected-access
    assert_verified._pytest_seed = seed
    assert_verified._pytest_n_cases = n_cases


@pytest.mark.parametrize(
    "args, expected_seed, expected_n_cases",
    [
        [[], DEFAULT_SEED, 4],
        [["--dd-seed", "7"], 7, 4],
        [["--dd-n-cases", "2"], DEFAULT_SEED, 2],
        [["--dd-seed", "7", "--dd-n-cases", "2"], 7, 2],
    ],
)
def test_seed_and_n_cases(
    pytester, plugin_state_keeper, registry_reseter, args, expected_seed, expected_n_cases
):
    """Test that the command line options reach the property checks."""
    pytester.makepyfile(
        f"""
        from decoding_dynamics import BaseCheck
        from decoding_dynamics import assert_verified

        SEEN = []


        class RecorderCheck(BaseCheck):
            name = "recorder"
            family = "custom"
            default_n_cases = 4

            def case_seed(self, seed):
                SEEN.append(seed)
                return seed

            def generate(self, rng, n_cases):
                SEEN.append(n_cases)
                yield from range(n_cases)

            def evaluate(self, case):
                return {{"ok": True}}


        def test_options():
            assert assert_verified(checks={{"recorder": RecorderCheck()}})
            assert SEEN == [{expected_seed}, {expected_n_cases}]


        def test_explicit_seed():
            SEEN.clear()
            assert assert_verified(checks={{"recorder": RecorderCheck()}}, seed=3, n_cases=1)
            assert SEEN == [3, 1]
        """
    )

    result = pytester.runpytest(*args)

    result.assert_outcomes(passed=2)


def test_failure_report(pytester, plugin_state_keeper, registry_reseter):
    """Test that a violated property fails the test with its report."""
    pytester.makepyfile(
        """
        from decoding_dynamics import BaseCheck
        from decoding_dynamics import assert_verified


        class OddCheck(BaseCheck):
            name = "odd"
            family = "custom"

            def generate(self, rng, n_cases):
                yield from range(n_cases)

            def evaluate(self, case):
                return {"ok": case % 2 == 1, "value": case}


        def test_odd():
            assert_verified(checks={"odd": OddCheck()})
        """
    )

    result = pytester.runpytest("--dd-n-cases", "3")

    result.assert_outcomes(failed=1)
    result.stdout.fnmatch_lines(["*The property 'odd' is violated:*"])
