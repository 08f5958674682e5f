"""Checks of the parallelism and order metrics against brute-force oracles."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from fractions import Fraction

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.metrics import afp
from decoding_dynamics.metrics import kendall_tau

TAU_TOLERANCE = 1e-12


def brute_force_afp(steps):
    """AFP from an explicit count of the distinct steps."""
    distinct = []
    for step in steps:
        if step not in distinct:
            distinct.append(step)
    return Fraction(len(steps), len(distinct))


def brute_force_tau(steps):
    """Kendall's tau by enumeration of the position pairs."""
    n = len(steps)
    concordant = 0
    discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if steps[j] > steps[i]:
                concordant += 1
            elif steps[j] < steps[i]:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


class MetricOracleCheck(BaseCheck):
    """AFP and Kendall's tau match their brute-force definitions."""

    name = "metric_oracle"
    family = "metrics"
    default_n_cases = 10000

    def generate(self, rng, n_cases, max_length=50):
        for _ in range(n_cases):
            n = int(rng.integers(1, max_length + 1))
            high = int(rng.integers(1, 2 * n + 1))
            yield [int(s) for s in rng.integers(1, high + 1, size=n)]

    def evaluate(self, steps):
        ok = afp(steps) == brute_force_afp(steps)
        if len(steps) >= 2:
            ok = ok and abs(kendall_tau(steps) - brute_force_tau(steps)) <= TAU_TOLERANCE
        return {"ok": bool(ok), "steps": steps}


class MetricFixedPointsCheck(BaseCheck):
    """Strictly increasing steps give AFP = 1 and Kendall's tau = 1."""

    name = "metric_fixed_points"
    family = "metrics"

    def generate(self, rng, n_cases, max_length=50):
        for _ in range(n_cases):
            n = int(rng.integers(2, max_length + 1))
            gaps = rng.integers(1, 4, size=n)
            yield [int(s) for s in gaps.cumsum()]

    def evaluate(self, steps):
        return {
            "ok": afp(steps) == 1 and kendall_tau(steps) == 1,
            "steps": steps,
        }


def register(force=False):
    """Register the metric checks."""
    register_check(MetricOracleCheck(), force=force)
    register_check(MetricFixedPointsCheck(), force=force)
