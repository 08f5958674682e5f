"""Checks of the information-theoretic identities of the distribution toolkit."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import numpy as np

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.distributions import ProductFamily
from decoding_dynamics.distributions import entropy
from decoding_dynamics.distributions import factorization_gap
from decoding_dynamics.distributions import independent_joint
from decoding_dynamics.distributions import marginal
from decoding_dynamics.distributions import product_joint
from decoding_dynamics.distributions import random_joint
from decoding_dynamics.distributions import total_correlation

RESIDUAL_TOLERANCE = 1e-10
ORDER_SLACK = 1e-12


def _random_shape(rng, max_vocab=4, max_length=3, min_length=1):
    return int(rng.integers(2, max_vocab + 1)), int(rng.integers(min_length, max_length + 1))


class GapDecompositionCheck(BaseCheck):
    """The divergence of a product family splits into the total correlation and the marginal
    divergences, and is never below the total correlation."""

    name = "gap_decomposition"
    family = "information"
    default_n_cases = 1000

    def generate(self, rng, n_cases, max_vocab=4, max_length=3):
        for _ in range(n_cases):
            V, L = _random_shape(rng, max_vocab, max_length)
            joint = random_joint(rng, V, L, concentration=float(rng.uniform(0.2, 2)))
            family = ProductFamily(tuple(rng.dirichlet(np.ones(V)) for _ in range(L)))
            yield joint, family

    def evaluate(self, case):
        joint, family = case
        gap = factorization_gap(joint, family)
        ok = abs(gap.residual) <= RESIDUAL_TOLERANCE and gap.kl_joint >= gap.tc - ORDER_SLACK
        return {
            "ok": bool(ok),
            "shape": (joint.vocab_size, joint.length),
            "residual": gap.residual,
            "kl_joint": gap.kl_joint,
            "tc": gap.tc,
        }

    def summarize(self, records):
        summary = super().summarize(records)
        summary["max_abs_residual"] = max((abs(r["residual"]) for r in records), default=0.0)
        return summary


class TotalCorrelationZeroCheck(BaseCheck):
    """The total correlation vanishes on products and only on them."""

    name = "tc_zero_iff_independent"
    family = "information"

    def generate(self, rng, n_cases):
        for index in range(n_cases):
            V, L = _random_shape(rng, min_length=2)
            if index % 2:
                yield "independent", independent_joint(rng, V, L)
            else:
                yield "dependent", random_joint(rng, V, L)

    def evaluate(self, case):
        kind, joint = case
        tc = total_correlation(joint)
        product = product_joint(ProductFamily.from_joint(joint))
        deviation = float(np.abs(joint.probs - product.probs).max())
        if kind == "independent":
            ok = tc <= RESIDUAL_TOLERANCE and deviation <= RESIDUAL_TOLERANCE
        elif deviation > 1e-3:
            ok = tc > RESIDUAL_TOLERANCE
        else:
            ok = None
        return {"ok": ok, "kind": kind, "tc": tc, "deviation": deviation}


class MarginalMinimizerCheck(BaseCheck):
    """Among product families, the true marginals minimize the divergence."""

    name = "gap_minimized_by_marginals"
    family = "information"

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            V, L = _random_shape(rng)
            joint = random_joint(rng, V, L)
            magnitude = float(rng.uniform(0.01, 1))
            yield joint, ProductFamily.from_joint(joint).perturbed(rng, magnitude)

    def evaluate(self, case):
        joint, perturbed = case
        best = factorization_gap(joint, ProductFamily.from_joint(joint)).kl_joint
        other = factorization_gap(joint, perturbed).kl_joint
        return {"ok": bool(other >= best - ORDER_SLACK), "best": best, "perturbed": other}


class EntropyAdditivityCheck(BaseCheck):
    """The entropy of a product is the sum of the entropies of its sites."""

    name = "entropy_additivity"
    family = "information"

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            V, L = _random_shape(rng)
            yield independent_joint(rng, V, L)

    def evaluate(self, joint):
        joint_entropy = entropy(joint)
        site_entropies = sum(entropy(marginal(joint, [i])) for i in range(joint.length))
        return {
            "ok": bool(abs(joint_entropy - site_entropies) <= RESIDUAL_TOLERANCE),
            "joint_entropy": joint_entropy,
            "site_entropies": site_entropies,
        }


def register(force=False):
    """Register the information checks."""
    register_check(GapDecompositionCheck(), force=force)
    register_check(TotalCorrelationZeroCheck(), force=force)
    register_check(MarginalMinimizerCheck(), force=force)
    register_check(EntropyAdditivityCheck(), force=force)
