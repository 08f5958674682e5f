"""Checks of the thresholded editing chain.

The contraction inequality with the interdependence ``alpha`` is only implied when the ergodic
coefficient of the kernel is not larger than ``alpha``; such configurations are called certified.
The inequality with the ergodic coefficient is asserted on every configuration where it is below
1, the inequality with ``alpha`` only on the certified ones. The other configurations are counted
and their worst ratio is reported.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import itertools

import numpy as np

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.distributions import correlated_bits
from decoding_dynamics.distributions import independent_joint
from decoding_dynamics.distributions import kl
from decoding_dynamics.distributions import random_joint
from decoding_dynamics.distributions import total_correlation
from decoding_dynamics.distributions import total_variation
from decoding_dynamics.editing_chain import CONTRACTION_SLACK
from decoding_dynamics.editing_chain import Predictor
from decoding_dynamics.editing_chain import SelectionPolicy
from decoding_dynamics.editing_chain import all_states
from decoding_dynamics.editing_chain import build_kernel
from decoding_dynamics.editing_chain import contraction_check
from decoding_dynamics.editing_chain import dobrushin
from decoding_dynamics.editing_chain import edit_set_distribution
from decoding_dynamics.editing_chain import ergodic_coefficient
from decoding_dynamics.editing_chain import invariance_check
from decoding_dynamics.editing_chain import mixing_time
from decoding_dynamics.editing_chain import stationary
from decoding_dynamics.exceptions import ConvergenceError

ROW_TOLERANCE = 1e-10
RECOVERY_TOLERANCE = 1e-8
INVARIANCE_TOLERANCE = 1e-10
DELTAS = (1e-1, 1e-2, 1e-3)
MAX_INITIALS = 20


def random_configuration(rng, max_vocab=3, max_length=3):
    """Draw a random (joint, predictor, policy) configuration."""
    V = int(rng.integers(2, max_vocab + 1))
    L = int(rng.integers(1, max_length + 1))
    joint = random_joint(rng, V, L, concentration=2.0, context_id="random")
    recipe = rng.integers(4)
    if recipe == 0:
        predictor = Predictor.full_conditional(joint)
    elif recipe == 1:
        predictor = Predictor.mean_field(joint)
    elif recipe == 2:
        predictor = Predictor.perturbed(
            Predictor.full_conditional(joint),
            seed=int(rng.integers(2**31)),
            magnitude=float(rng.uniform(0, 1)),
        )
    else:
        predictor = Predictor.constant(rng.dirichlet(np.ones(V), size=L))
    kind = rng.integers(5)
    if kind == 0:
        policy = SelectionPolicy.threshold(float(rng.uniform(0, 1.05)))
    elif kind == 1:
        policy = SelectionPolicy.top1()
    elif kind == 2:
        policy = SelectionPolicy.full()
    elif kind == 3:
        size = int(rng.integers(1, L + 1))
        policy = SelectionPolicy.fixed(rng.choice(L, size=size, replace=False).tolist())
    else:
        policy = SelectionPolicy.random_scan_singleton()
    return joint, predictor, policy


def _point_masses(n_states, rng):
    indices = np.arange(n_states)
    if n_states > MAX_INITIALS:
        indices = np.sort(rng.choice(n_states, size=MAX_INITIALS, replace=False))
    return [np.eye(n_states)[i] for i in indices]


class KernelSoundnessCheck(BaseCheck):
    """Kernel rows are distributions that only move the sites of the possible edit sets."""

    name = "kernel_soundness"
    family = "chains"

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            yield random_configuration(rng)

    def evaluate(self, case):
        _, predictor, policy = case
        kernel = build_kernel(predictor, policy)
        row_error = float(np.abs(kernel.matrix.sum(axis=1) - 1).max())
        states = all_states(predictor.vocab_size, predictor.length)
        leaked = 0.0
        for index, sequence in enumerate(states):
            confidences = predictor.table[index].max(axis=1)
            allowed = np.zeros(len(states), dtype=bool)
            for sites, _ in edit_set_distribution(confidences, policy):
                frozen = [i for i in range(predictor.length) if i not in sites]
                allowed |= np.all(states[:, frozen] == sequence[frozen], axis=1)
            leaked = max(leaked, float(kernel.matrix[index, ~allowed].sum()))
        return {
            "ok": row_error <= ROW_TOLERANCE and leaked <= ROW_TOLERANCE,
            "config": kernel.config_id,
            "row_error": row_error,
            "leaked_mass": leaked,
        }


def _contraction_record(kernel, alpha, rng):
    """Evaluate the contraction and mixing inequalities of one kernel."""
    record = {"config": kernel.config_id, "alpha": alpha}
    if alpha >= 1:
        record["ok"] = None
        return record
    coefficient = ergodic_coefficient(kernel)
    record["ergodic_coefficient"] = coefficient
    if coefficient >= 1 - 1e-12:
        record["ok"] = None
        return record
    limit = stationary(kernel).distribution
    initials = _point_masses(kernel.n_states, rng)

    ok = contraction_check(kernel, coefficient, initials, reference=limit).status != "failed"
    for delta in DELTAS:
        ok = ok and mixing_time(kernel, delta, alpha=coefficient, reference=limit).within_bound
    certified = coefficient <= alpha + CONTRACTION_SLACK
    report = contraction_check(kernel, alpha, initials, reference=limit)
    record["certified"] = certified
    record["alpha_ratio"] = report.worst_ratio
    if certified:
        ok = ok and report.status == "passed"
        for delta in DELTAS:
            ok = ok and mixing_time(kernel, delta, alpha=alpha, reference=limit).within_bound
    record["ok"] = bool(ok)
    return record


class ContractionCheck(BaseCheck):
    """Total variation contracts geometrically and mixing happens within the geometric bound."""

    name = "tv_contraction"
    family = "chains"

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            _, predictor, policy = random_configuration(rng)
            yield predictor, policy, int(rng.integers(2**31))

    def evaluate(self, case):
        predictor, policy, seed = case
        alpha = dobrushin(predictor, policy).alpha
        kernel = build_kernel(predictor, policy)
        try:
            return _contraction_record(kernel, alpha, np.random.default_rng(seed))
        except ConvergenceError as exc:
            return {"ok": None, "config": kernel.config_id, "alpha": alpha, "error": str(exc)}

    def summarize(self, records):
        summary = super().summarize(records)
        certified = [r for r in records if r.get("certified") is True]
        uncertified = [r for r in records if r.get("certified") is False]
        summary["certified"] = len(certified)
        summary["uncertified"] = len(uncertified)
        summary["worst_uncertified_alpha_ratio"] = max(
            (r["alpha_ratio"] for r in uncertified), default=None
        )
        return summary


class WorkedDobrushinCheck(BaseCheck):
    """Correlated fair bits (equal with probability 0.9) under full-conditional editing."""

    name = "worked_dobrushin_instance"
    family = "chains"
    default_n_cases = 1

    def generate(self, rng, n_cases):
        joint = correlated_bits(0.9, context_id="correlated_bits")
        predictor = Predictor.full_conditional(joint)
        yield predictor, SelectionPolicy.full(), np.array([[0, 0.8], [0.8, 0]]), 0.8
        random_scan = SelectionPolicy.random_scan_singleton()
        yield predictor, random_scan, np.array([[0, 0.4], [0.4, 0]]), 0.4

    def evaluate(self, case):
        predictor, policy, expected_A, expected_alpha = case
        report = dobrushin(predictor, policy)
        ok = np.allclose(report.A, expected_A, rtol=0, atol=1e-12)
        ok = ok and abs(report.alpha - expected_alpha) <= 1e-12
        kernel = build_kernel(predictor, policy)
        record = _contraction_record(kernel, report.alpha, np.random.default_rng(0))
        if record.get("certified"):
            ok = ok and record["ok"]
        return {
            "ok": bool(ok),
            "policy": policy.name,
            "A": report.A.tolist(),
            "alpha": report.alpha,
            "certified": record.get("certified"),
            "alpha_ratio": record.get("alpha_ratio"),
        }


class RecoveryCheck(BaseCheck):
    """Realizable predictors leave the true joint invariant and the chain recovers it."""

    name = "exact_recovery"
    family = "chains"

    def generate(self, rng, n_cases, max_vocab=3, max_length=3):
        for index in range(n_cases):
            V = int(rng.integers(2, max_vocab + 1))
            L = int(rng.integers(2, max_length + 1))
            if index % 2:
                joint = random_joint(rng, V, L, concentration=2.0, context_id="gibbs")
                yield "gibbs", joint, Predictor.full_conditional(joint), (
                    SelectionPolicy.random_scan_singleton()
                )
            else:
                joint = independent_joint(rng, V, L, context_id="independent")
                predictor = Predictor.mean_field(joint)
                lowest = float(predictor.table[0].max(axis=1).min())
                tau = rng.uniform(0, lowest) if rng.uniform() < 0.7 else rng.uniform(0, 1)
                yield "mean_field", joint, predictor, SelectionPolicy.threshold(float(tau))

    def evaluate(self, case):
        construction, joint, predictor, policy = case
        kernel = build_kernel(predictor, policy)
        record = {
            "construction": construction,
            "config": kernel.config_id,
            "invariance_defect": invariance_check(kernel, joint),
        }
        alpha = dobrushin(predictor, policy).alpha
        fixed_point = stationary(kernel)
        if alpha >= 1 or not fixed_point.unique:
            record["ok"] = None
            return record
        record["recovery_tv"] = total_variation(fixed_point.distribution, joint)
        record["ok"] = (
            record["recovery_tv"] <= RECOVERY_TOLERANCE
            and record["invariance_defect"] <= INVARIANCE_TOLERANCE
        )
        return record


class MeanFieldOneStepCheck(BaseCheck):
    """One mean-field step with threshold 0 lands on the product of the marginals, whose
    divergence from the joint is its total correlation."""

    name = "mean_field_one_step_gap"
    family = "chains"

    def generate(self, rng, n_cases, max_vocab=3, max_length=3):
        for _ in range(n_cases):
            V = int(rng.integers(2, max_vocab + 1))
            L = int(rng.integers(2, max_length + 1))
            yield random_joint(rng, V, L)

    def evaluate(self, joint):
        kernel = build_kernel(Predictor.mean_field(joint), SelectionPolicy.threshold(0))
        gaps = []
        for start in itertools.islice(np.eye(kernel.n_states), 3):
            one_step = kernel.step(start)
            gaps.append(kl(joint.flat, one_step))
        tc = total_correlation(joint)
        return {
            "ok": all(abs(gap - tc) <= 1e-10 for gap in gaps),
            "tc": tc,
            "one_step_kl": gaps,
        }


def register(force=False):
    """Register the editing-chain checks."""
    register_check(KernelSoundnessCheck(), force=force)
    register_check(ContractionCheck(), force=force)
    register_check(WorkedDobrushinCheck(), force=force)
    register_check(RecoveryCheck(), force=force)
    register_check(MeanFieldOneStepCheck(), force=force)
