"""Configuration for the pytest test suite."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

# pylint: disable=redefined-outer-name
import json

import numpy as np
import pytest

import decoding_dynamics
from decoding_dynamics.distributions import correlated_bits
from decoding_dynamics.trace import DecodingTrace
from decoding_dynamics.trace import TraceCorpus
from decoding_dynamics.trace import TraceToken

pytest_plugins = ["pytester"]


@pytest.fixture
def registry_reseter():
    """Fixture to automatically reset the check registry before and after a test."""
    decoding_dynamics.reset_checks()
    yield None
    decoding_dynamics.reset_checks()


@pytest.fixture
def rng():
    """A seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def correlated_joint():
    """The two correlated fair bits with P(00) = P(11) = 0.45."""
    return correlated_bits(0.9, context_id="bits")


def make_trace(sample_id, steps, blocks=None, labels=None, texts=None, **kwargs):
    """Build a trace from its steps indexed by position."""
    blocks = blocks or [0] * len(steps)
    labels = labels or [None] * len(steps)
    texts = texts or [None] * len(steps)
    tokens = tuple(
        TraceToken(position=i, finalize_step=s, block_index=b, text=t, label=lab)
        for i, (s, b, t, lab) in enumerate(zip(steps, blocks, texts, labels))
    )
    return DecodingTrace(sample_id=sample_id, tokens=tokens, **kwargs)


@pytest.fixture
def trace_factory():
    """Return the trace builder."""
    return make_trace


@pytest.fixture
def small_corpus():
    """A corpus mixing domains, correctness and repetition flags."""
    return TraceCorpus(
        (
            make_trace(
                "ar",
                [1, 2, 3, 4],
                blocks=[0, 0, 1, 1],
                labels=["DET", "NOUN", "VERB", "PUNCT"],
                texts=["the", "cat", "sat", "."],
                domain_tag="math",
                correctness="correct",
            ),
            make_trace(
                "parallel",
                [1, 1, 2, 2],
                blocks=[0, 0, 1, 1],
                labels=["NUM", "PUNCT", "NUM", "PUNCT"],
                texts=["1", ",", "2", ","],
                domain_tag="math",
                correctness="correct",
            ),
            make_trace(
                "reverse",
                [2, 1, 4, 3],
                blocks=[0, 0, 1, 1],
                texts=["a", "b", "c", "d"],
                domain_tag="code",
                correctness="incorrect",
                repetitive=True,
            ),
        ),
        provenance="fixture",
    )


def trace_record(sample_id, steps, blocks=None, step_scope="global", **kwargs):
    """Build a JSON record of the trace schema."""
    blocks = blocks or [0] * len(steps)
    return {
        "sample_id": sample_id,
        "step_scope": step_scope,
        "tokens": [
            {"position": i, "finalize_step": s, "block_index": b}
            for i, (s, b) in enumerate(zip(steps, blocks))
        ],
        **kwargs,
    }


@pytest.fixture
def trace_file(tmp_path):
    """A JSON-lines trace file with global and per-block traces."""
    path = tmp_path / "traces.jsonl"
    records = [
        trace_record("s0", [1, 2, 3], domain_tag="math", correct=True),
        trace_record("s1", [1, 1, 2, 2], domain_tag="math", correct=False),
        trace_record("s2", [1, 2, 1, 1], blocks=[0, 0, 1, 1], step_scope="per_block"),
    ]
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def runtime_spec_file(tmp_path):
    """A runtime spec file with one unavailable alpha."""
    path = tmp_path / "runtime.txt"
    path.write_text(
        "\n".join(
            [
                "# stage count, time per stage",
                "t_step 1 1.0",
                "t_step 2 1.0",
                "t_step 8 1.0",
                "alpha 1 0.5",
                "alpha 2 unavailable",
                "m0 8",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return path
