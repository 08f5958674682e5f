"""Test the decoder simulator of the ``decoding-dynamics`` package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

# pylint: disable=missing-function-docstring
# pylint: disable=redefined-outer-name
import logging

import numpy as np
import pytest

from decoding_dynamics.decoder import DecodeConfig
from decoding_dynamics.decoder import TableLanguageModel
from decoding_dynamics.decoder import afp_schedule
from decoding_dynamics.decoder import batch_decode
from decoding_dynamics.decoder import decode
from decoding_dynamics.decoder import load_model
from decoding_dynamics.decoder import random_table_model
from decoding_dynamics.decoder import save_model
from decoding_dynamics.distributions import JointTable
from decoding_dynamics.distributions import ProductFamily
from decoding_dynamics.exceptions import DecodingStalledError
from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.metrics import GroupingSpec
from decoding_dynamics.metrics import afp
from decoding_dynamics.metrics import aggregate
from decoding_dynamics.metrics import block_trajectories
from decoding_dynamics.metrics import kendall_tau
from decoding_dynamics.trace import TraceCorpus


@pytest.fixture
def model(rng):
    """A random model with 3 contexts, V=3, L=6 and B=3."""
    return random_table_model(rng, 3, 6, 3, contexts=3)


def point_mass_model(sequence, vocab_size=2, block_size=2):
    probs = np.zeros((vocab_size,) * len(sequence))
    probs[tuple(sequence)] = 1
    return TableLanguageModel({"c": JointTable(probs)}, block_size)


def uniform_model(vocab_size=2, length=4, block_size=2):
    probs = np.full((vocab_size,) * length, 1.0 / vocab_size**length)
    return TableLanguageModel({"c": JointTable(probs)}, block_size)


class TestDecodeConfig:
    """Tests of the schedule configuration."""

    @pytest.mark.parametrize("tau", [None, 0, 1, 1.5])
    def test_threshold_range(self, tau):
        with pytest.raises(DomainError, match=r"in \(0, 1\)"):
            DecodeConfig(mode="threshold", tau_conf=tau)

    def test_tau_only_for_threshold(self):
        with pytest.raises(DomainError, match="only used by the threshold mode"):
            DecodeConfig(mode="top1", tau_conf=0.5)

    def test_metadata(self):
        assert DecodeConfig(mode="threshold", tau_conf=0.7).metadata() == {
            "mode": "threshold",
            "tau_conf": 0.7,
            "choose_rule": "greedy",
            "forced_progress": True,
            "confidence": "raw_max_probability",
        }


class TestTableLanguageModel:
    """Tests of the table models."""

    def test_block_size_must_divide_length(self, rng):
        with pytest.raises(DomainError, match="does not divide"):
            random_table_model(rng, 2, 5, 2)

    def test_unknown_context(self, model):
        with pytest.raises(DomainError, match="Unknown context"):
            model.joint("missing")

    def test_block_conditional(self, model):
        joint = model.joint("c0")
        conditional = model.block_conditional("c0", 1, (0, 1, 2))
        expected = joint.probs[0, 1, 2] / joint.probs[0, 1, 2].sum()
        np.testing.assert_allclose(conditional.probs, expected)
        assert conditional.context_id == "c0/block1"

    def test_zero_probability_prefix(self):
        conditional = point_mass_model((1, 0, 1, 1)).block_conditional("c", 1, (0, 0))
        np.testing.assert_array_equal(conditional.probs, np.full((2, 2), 0.25))

    def test_save_and_load(self, model, tmp_path):
        paths = save_model(model, tmp_path / "model")
        assert [p.name for p in paths] == ["c0.txt", "c1.txt", "c2.txt"]
        loaded = load_model(paths)
        assert loaded.block_size == 3
        assert loaded.context_ids == ["c0", "c1", "c2"]
        assert loaded.joint("c1") == model.joint("c1")

    def test_missing_block_line(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 1\n0.5 0.5\n", encoding="utf-8")
        with pytest.raises(DomainError, match="B <block size>"):
            load_model([path])


class TestDecode:
    """Tests of the decoding schedules."""

    def test_autoregressive(self, model):
        config = DecodeConfig(mode="ar_baseline")
        for context_id in model.context_ids:
            _, trace = decode(model, config, context_id)
            assert trace.steps == [1, 2, 3, 4, 5, 6]
            assert afp(trace.steps) == 1
            assert kendall_tau(trace.steps) == 1

    def test_accept_all(self, model):
        _, trace = decode(model, DecodeConfig(mode="accept_all"), "c0")
        assert trace.steps == [1, 1, 1, 2, 2, 2]
        assert afp(trace.steps) == 3
        assert all(b.block_afp == 3 for b in block_trajectories(trace))

    def test_accept_all_is_product_argmax(self, rng):
        model = random_table_model(rng, 3, 3, 3)
        values, _ = decode(model, DecodeConfig(mode="accept_all"), "c0")
        assert values == ProductFamily.from_joint(model.joint("c0")).argmax()

    def test_top1_point_mass(self):
        values, trace = decode(point_mass_model((1, 0, 1, 1)), DecodeConfig(mode="top1"), "c")
        assert values == (1, 0, 1, 1)
        assert afp(trace.steps) == 1
        assert [t.text for t in trace.tokens] == ["1", "0", "1", "1"]

    def test_top1_ties_lowest_position(self):
        _, trace = decode(uniform_model(), DecodeConfig(mode="top1"), "c")
        assert trace.steps == [1, 2, 3, 4]

    def test_blocks_are_sequential(self, model):
        _, trace = decode(model, DecodeConfig(mode="threshold", tau_conf=0.3), "c1")
        assert [t.block_index for t in trace.tokens] == [0, 0, 0, 1, 1, 1]
        first, second = trace.steps_by_block().values()
        assert max(first) < min(second)

    def test_forced_progress(self, caplog):
        caplog.set_level(logging.WARNING, logger="decoding-dynamics")
        _, trace = decode(uniform_model(), DecodeConfig(mode="threshold", tau_conf=0.9), "c")
        assert trace.metadata["forced_steps"] == [1, 2, 3, 4]
        assert caplog.messages == ["Forced progress at steps [1, 2, 3, 4] while decoding c"]

    def test_stalled(self):
        config = DecodeConfig(mode="threshold", tau_conf=0.9, forced_progress=False)
        with pytest.raises(DecodingStalledError, match="reaches the threshold"):
            decode(uniform_model(), config, "c")

    def test_sampling_is_seeded(self, model):
        config = DecodeConfig(mode="top1", choose_rule="sample")
        first, _ = decode(model, config, "c0", seed=5)
        second, _ = decode(model, config, "c0", seed=5)
        assert first == second

    def test_metadata(self, model):
        _, trace = decode(model, DecodeConfig(), "c2", sample_id="x")
        assert trace.sample_id == "x"
        assert trace.domain_tag == "simulated"
        assert trace.metadata["context_id"] == "c2"
        assert trace.metadata["block_size"] == 3
        assert trace.metadata["mode"] == "top1"


class TestBatchDecode:
    """Tests of the batches of decodes."""

    def test_deterministic(self, model):
        config = DecodeConfig(mode="threshold", tau_conf=0.5, choose_rule="sample")
        first = batch_decode(model, config, model.context_ids, seed=7)
        second = batch_decode(model, config, model.context_ids, seed=7)
        assert first == second
        assert [t.sample_id for t in first] == ["c0-0", "c1-1", "c2-2"]

    def test_empty(self, model):
        assert len(batch_decode(model, DecodeConfig(), [])) == 0

    def test_groups_per_mode(self, model):
        traces = []
        for mode in ["top1", "accept_all", "ar_baseline"]:
            corpus = batch_decode(
                model, DecodeConfig(mode=mode), model.context_ids, prefix=f"{mode}/"
            )
            traces.extend(corpus)
        bucketing = GroupingSpec(fields=(), metadata_keys=("mode",))
        groups = aggregate(TraceCorpus(tuple(traces)), bucketing)
        assert [(g.group_key, g.mean_afp) for g in groups] == [
            (("accept_all",), 3.0),
            (("ar_baseline",), 1.0),
            (("top1",), 1.0),
        ]


class TestAfpSchedule:
    """Tests of the AFP over a threshold grid."""

    def test_single_small_block(self, rng):
        for _ in range(5):
            model = random_table_model(rng, 3, 3, 3)
            report = afp_schedule(model, [0.9, 0.1, 0.5, 0.3, 0.7], "c0")
            assert [tau for tau, _ in report.rows] == [0.1, 0.3, 0.5, 0.7, 0.9]
            assert report.monotone

    def test_extremes(self):
        report = afp_schedule(uniform_model(), [0.2, 0.9], "c")
        assert report.rows == ((0.2, 2), (0.9, 1))
        assert report.monotone
