"""Checks of the schedules of the block decoder."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.decoder import ChooseRule
from decoding_dynamics.decoder import DecodeConfig
from decoding_dynamics.decoder import DecodeMode
from decoding_dynamics.decoder import afp_schedule
from decoding_dynamics.decoder import decode
from decoding_dynamics.decoder import random_table_model
from decoding_dynamics.distributions import ProductFamily
from decoding_dynamics.metrics import afp
from decoding_dynamics.metrics import block_trajectories
from decoding_dynamics.metrics import kendall_tau

TAU_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
# Shapes (V, L, B) on which a higher threshold can never raise the AFP
MONOTONE_SHAPES = ((3, 3, 3), (3, 4, 2))


class DecoderScheduleCheck(BaseCheck):
    """Left-to-right and top-1 decoding finalize one token per step, accept-all one block."""

    name = "decoder_schedules"
    family = "decoding"
    default_n_cases = 50

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            V = int(rng.integers(2, 4))
            B = int(rng.integers(1, 4))
            L = B * int(rng.integers(1, 4))
            model = random_table_model(rng, V, L, B)
            rule = ChooseRule.SAMPLE if rng.uniform() < 0.5 else ChooseRule.GREEDY
            yield model, rule, int(rng.integers(2**31))

    def evaluate(self, case):
        model, rule, seed = case
        context = model.context_ids[0]
        record = {"model": repr(model), "choose_rule": rule.value}
        ok = True
        for mode in (DecodeMode.AR_BASELINE, DecodeMode.TOP1, DecodeMode.ACCEPT_ALL):
            _, trace = decode(model, DecodeConfig(mode=mode, choose_rule=rule), context, seed=seed)
            ok = ok and [t.block_index for t in trace.tokens] == [
                i // model.block_size for i in range(model.length)
            ]
            if mode is DecodeMode.ACCEPT_ALL:
                ok = ok and all(b.block_afp == model.block_size for b in block_trajectories(trace))
            else:
                ok = ok and afp(trace.steps) == 1
            if mode is DecodeMode.AR_BASELINE and model.length >= 2:
                ok = ok and kendall_tau(trace.steps) == 1
        record["ok"] = bool(ok)
        return record


class AfpMonotonicityCheck(BaseCheck):
    """Raising the confidence threshold never increases the AFP of greedy decoding."""

    name = "afp_schedule_monotone"
    family = "decoding"
    default_n_cases = 20

    def generate(self, rng, n_cases):
        for index in range(n_cases):
            V, L, B = MONOTONE_SHAPES[index % len(MONOTONE_SHAPES)]
            yield random_table_model(rng, V, L, B, concentration=float(rng.uniform(0.1, 2)))

    def evaluate(self, model):
        report = afp_schedule(model, TAU_GRID, model.context_ids[0])
        return {
            "ok": report.monotone,
            "model": repr(model),
            "afp": [float(a) for _, a in report.rows],
            "violations": list(report.violations),
        }


class AcceptAllArgmaxCheck(BaseCheck):
    """Greedy accept-all decoding outputs the argmax of the block marginals."""

    name = "accept_all_matches_product_argmax"
    family = "decoding"
    default_n_cases = 50

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            B = int(rng.integers(1, 4))
            yield random_table_model(rng, int(rng.integers(2, 4)), 2 * B, B)

    def evaluate(self, model):
        context = model.context_ids[0]
        sequence, _ = decode(model, DecodeConfig(mode=DecodeMode.ACCEPT_ALL), context)
        expected = []
        for block in range(model.block_count):
            conditional = model.block_conditional(context, block, expected)
            expected.extend(ProductFamily.from_joint(conditional).argmax())
        return {"ok": tuple(expected) == sequence, "decoded": sequence, "expected": expected}


def register(force=False):
    """Register the decoder checks."""
    register_check(DecoderScheduleCheck(), force=force)
    register_check(AfpMonotonicityCheck(), force=force)
    register_check(AcceptAllArgmaxCheck(), force=force)
