"""Checks of the runtime trade-off model."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import math

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.runtime import RuntimeSpec
from decoding_dynamics.runtime import edit_rounds
from decoding_dynamics.runtime import no_slowdown


class RuntimeWorkedExampleCheck(BaseCheck):
    """Worked values of the number of rounds and of the no-slowdown condition."""

    name = "runtime_worked_example"
    family = "runtime"
    default_n_cases = 1

    def generate(self, rng, n_cases):
        # (alpha, delta, m0, expected rounds, expected verdict)
        yield 0.5, 0.01, 8, 7, True
        yield 0.5, 0.01, 4, 7, False
        yield 0.9, 0.1, 8, 22, False

    def evaluate(self, case):
        alpha, delta, m0, rounds, verdict = case
        spec = RuntimeSpec(t_step={1: 1.0, m0: 1.0}, m0=m0, alpha_of_m={1: alpha})
        report = no_slowdown(spec, 1, delta)
        return {
            "ok": report.k_rounds == rounds and report.no_slowdown is verdict,
            "inequality": report.binding_inequality,
        }


class RuntimeMonotonicityCheck(BaseCheck):
    """Faster stages never break the no-slowdown condition and rounds grow logarithmically."""

    name = "runtime_monotonicity"
    family = "runtime"

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            m0 = int(rng.integers(2, 64))
            m = int(rng.integers(1, m0))
            t_m0 = float(rng.uniform(0.1, 2))
            t_m = t_m0 * float(rng.uniform(1, 4))
            alpha = float(rng.uniform(0, 0.99))
            delta = float(10 ** rng.uniform(-8, -0.1))
            yield m, m0, t_m, t_m0, alpha, delta, float(rng.uniform(0.1, 1))

    def evaluate(self, case):
        m, m0, t_m, t_m0, alpha, delta, shrink = case
        spec = RuntimeSpec(t_step={m: t_m, m0: t_m0}, m0=m0, alpha_of_m={m: alpha})
        faster = RuntimeSpec(
            t_step={m: max(t_m * shrink, t_m0), m0: t_m0}, m0=m0, alpha_of_m={m: alpha}
        )
        report = no_slowdown(spec, m, delta)
        ok = report.t_edit == report.k_rounds * report.t_step_m
        if report.no_slowdown:
            ok = ok and no_slowdown(faster, m, delta).no_slowdown
        rounds = edit_rounds(spec, m, delta)
        finer = edit_rounds(spec, m, delta / 2)
        if alpha > 0:
            allowed = math.ceil(math.log(2) / math.log(1 / alpha)) + 1
        else:
            allowed = 1
        ok = ok and 0 <= finer - rounds <= allowed
        return {"ok": bool(ok), "alpha": alpha, "delta": delta, "rounds": (rounds, finer)}


def register(force=False):
    """Register the runtime checks."""
    register_check(RuntimeWorkedExampleCheck(), force=force)
    register_check(RuntimeMonotonicityCheck(), force=force)
