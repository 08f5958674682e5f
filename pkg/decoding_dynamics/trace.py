"""Canonical representation and ingestion of decoding traces.

A trace records, for every token of a generated sequence, the decode step at which the token was
finalized and the block it belongs to. Traces come from the decoder simulator, from the puzzle
solvers or from external runs written in the JSON-lines schema below::

    {"sample_id": "s0", "step_scope": "global", "tokens": [
        {"position": 0, "finalize_step": 1, "block_index": 0, "text": "The", "label": "DET"},
        ...
    ], "domain_tag": "math", "correct": true, "repetitive": false, "metadata": {"mode": "top1"}}

Unknown keys are ignored. A first line of the form ``{"header": {...}}`` is skipped.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import json
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from enum import Enum
from pathlib import Path
from typing import Optional

from decoding_dynamics.exceptions import TraceParseError
from decoding_dynamics.exceptions import TraceValidationError
from decoding_dynamics.util import LOGGER
from decoding_dynamics.util import to_jsonable


class StepScope(str, Enum):
    """How the ``finalize_step`` values of a trace are numbered."""

    GLOBAL = "global"
    PER_BLOCK = "per_block"


class Correctness(str, Enum):
    """Tri-state correctness of a sample."""

    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNKNOWN = "unknown"

    @classmethod
    def from_flag(cls, flag):
        """Build from the optional boolean ``correct`` key of the schema."""
        if flag is None:
            return cls.UNKNOWN
        return cls.CORRECT if flag else cls.INCORRECT

    def to_flag(self):
        """Inverse of :meth:`from_flag`."""
        if self is Correctness.UNKNOWN:
            return None
        return self is Correctness.CORRECT


@dataclass(frozen=True)
class TraceToken:
    """One finalized token."""

    position: int
    finalize_step: int
    block_index: int = 0
    text: Optional[str] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class DecodingTrace:
    """The finalization record of one sample.

    The tokens are stored sorted by position. The constructor checks every invariant and raises a
    :class:`~decoding_dynamics.exceptions.TraceValidationError` naming the faulty field.
    """

    sample_id: str
    tokens: tuple
    step_scope: StepScope = StepScope.GLOBAL
    domain_tag: Optional[str] = None
    correctness: Correctness = Correctness.UNKNOWN
    repetitive: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "step_scope", StepScope(self.step_scope))
        object.__setattr__(self, "correctness", Correctness(self.correctness))
        object.__setattr__(self, "repetitive", bool(self.repetitive))
        object.__setattr__(self, "metadata", dict(self.metadata or {}))
        tokens = tuple(sorted(self.tokens, key=lambda t: t.position))
        object.__setattr__(self, "tokens", tokens)
        self._validate()

    def _error(self, msg, field_name):
        return TraceValidationError(msg, sample_id=self.sample_id, field=field_name)

    def _validate(self):
        if not isinstance(self.sample_id, str) or not self.sample_id:
            raise self._error("the sample id must be a non-empty string", "sample_id")
        if not self.tokens:
            raise self._error("a trace must contain at least one token", "tokens")

        positions = [t.position for t in self.tokens]
        if len(set(positions)) != len(positions):
            duplicated = sorted({p for p in positions if positions.count(p) > 1})
            raise self._error(f"duplicated positions {duplicated}", "position")
        if positions != list(range(len(positions))):
            raise self._error(
                f"positions must be exactly 0..{len(positions) - 1} without gaps", "position"
            )

        for token in self.tokens:
            if not isinstance(token.finalize_step, int) or token.finalize_step < 1:
                raise self._error(
                    f"token {token.position} has finalize_step {token.finalize_step!r} < 1",
                    "finalize_step",
                )
            if not isinstance(token.block_index, int) or token.block_index < 0:
                raise self._error(
                    f"token {token.position} has a negative block_index {token.block_index!r}",
                    "block_index",
                )

        blocks = [t.block_index for t in self.tokens]
        for previous, current in zip(blocks, blocks[1:]):
            if current < previous:
                raise self._error("block_index must be non-decreasing in position", "block_index")

        if self.step_scope is StepScope.GLOBAL:
            last_max = 0
            for block_steps in self.steps_by_block().values():
                if min(block_steps) <= last_max:
                    raise self._error(
                        "with a global step scope, every step of a block must be greater than "
                        "every step of the earlier blocks",
                        "finalize_step",
                    )
                last_max = max(block_steps)

    def __len__(self):
        return len(self.tokens)

    @property
    def steps(self):
        """The finalization steps indexed by position."""
        return [t.finalize_step for t in self.tokens]

    @property
    def block_indices(self):
        """The block indices present in the trace, in order."""
        return sorted({t.block_index for t in self.tokens})

    @property
    def block_count(self):
        """The number of distinct blocks."""
        return len(self.block_indices)

    def steps_by_block(self):
        """Return a ``dict`` mapping each block index to the steps of its tokens."""
        res = {}
        for token in self.tokens:
            res.setdefault(token.block_index, []).append(token.finalize_step)
        return res

    def tokens_by_block(self):
        """Return a ``dict`` mapping each block index to its tokens (position order)."""
        res = {}
        for token in self.tokens:
            res.setdefault(token.block_index, []).append(token)
        return res


@dataclass(frozen=True)
class TraceCorpus:
    """A collection of traces with unique sample ids."""

    traces: tuple = ()
    provenance: str = ""

    def __post_init__(self):
        traces = tuple(self.traces)
        object.__setattr__(self, "traces", traces)
        seen = set()
        for trace in traces:
            if trace.sample_id in seen:
                raise TraceValidationError(
                    "the sample id is not unique in the corpus",
                    sample_id=trace.sample_id,
                    field="sample_id",
                )
            seen.add(trace.sample_id)

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)


def trace_from_record(record, line_number=None):
    """Build a :class:`DecodingTrace` from one decoded JSON object of the trace schema."""
    if not isinstance(record, dict):
        raise TraceParseError("a trace record must be a JSON object", line_number)
    for key in ["sample_id", "step_scope", "tokens"]:
        if key not in record:
            raise TraceParseError(f"missing required key '{key}'", line_number)
    if not isinstance(record["tokens"], list):
        raise TraceParseError("'tokens' must be an array", line_number)

    sample_id = record["sample_id"]
    try:
        step_scope = StepScope(record["step_scope"])
    except ValueError as exc:
        raise TraceValidationError(
            f"unknown step scope {record['step_scope']!r}", sample_id=sample_id, field="step_scope"
        ) from exc
    for key, nullable in [("correct", True), ("repetitive", False)]:
        flag = record.get(key)
        if not isinstance(flag, bool) and not (flag is None and (nullable or key not in record)):
            raise TraceValidationError(
                f"expected a boolean, got {flag!r}", sample_id=sample_id, field=key
            )

    tokens = []
    for num, raw in enumerate(record["tokens"]):
        if not isinstance(raw, dict):
            raise TraceParseError(f"token {num} must be a JSON object", line_number)
        for key in ["position", "finalize_step", "block_index"]:
            if key not in raw:
                raise TraceParseError(f"token {num} is missing the key '{key}'", line_number)
            if isinstance(raw[key], bool) or not isinstance(raw[key], int):
                raise TraceValidationError(
                    f"token {num} has a non-integer value {raw[key]!r}",
                    sample_id=sample_id,
                    field=key,
                )
        tokens.append(
            TraceToken(
                position=raw["position"],
                finalize_step=raw["finalize_step"],
                block_index=raw["block_index"],
                text=raw.get("text"),
                label=raw.get("label"),
            )
        )

    return DecodingTrace(
        sample_id=sample_id,
        tokens=tuple(tokens),
        step_scope=step_scope,
        domain_tag=record.get("domain_tag"),
        correctness=Correctness.from_flag(record.get("correct")),
        repetitive=record.get("repetitive", False),
        metadata=record.get("metadata") or {},
    )


def trace_to_record(trace):
    """Convert a :class:`DecodingTrace` into a JSON object of the trace schema."""
    tokens = []
    for token in trace.tokens:
        raw = {
            "position": token.position,
            "finalize_step": token.finalize_step,
            "block_index": token.block_index,
        }
        if token.text is not None:
            raw["text"] = token.text
        if token.label is not None:
            raw["label"] = token.label
        tokens.append(raw)
    record = {
        "sample_id": trace.sample_id,
        "step_scope": trace.step_scope.value,
        "tokens": tokens,
        "repetitive": trace.repetitive,
    }
    if trace.domain_tag is not None:
        record["domain_tag"] = trace.domain_tag
    flag = trace.correctness.to_flag()
    if flag is not None:
        record["correct"] = flag
    if trace.metadata:
        record["metadata"] = to_jsonable(trace.metadata)
    return record


def ingest_traces(path):
    """Load a trace file into a :class:`TraceCorpus`.

    Args:
        path (str): Path to a UTF-8 JSON-lines file.

    Returns:
        TraceCorpus: The corpus, with the file path as provenance.
    """
    path = Path(path)
    traces = []
    with path.open(encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceParseError(f"malformed JSON ({exc.msg})", line_number) from exc
            if line_number == 1 and isinstance(record, dict) and set(record) == {"header"}:
                continue
            traces.append(trace_from_record(record, line_number))
    LOGGER.debug("Loaded %s traces from %s", len(traces), path)
    return TraceCorpus(traces=tuple(traces), provenance=str(path))


def emit_traces(corpus, path, header=None):
    """Write a corpus in the trace schema.

    Args:
        corpus (TraceCorpus): The corpus to write.
        path (str): The output path.
        header (dict): (Optional) A header object written as the first line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if header is not None:
            f.write(json.dumps({"header": to_jsonable(header)}, sort_keys=True) + "\n")
        for trace in corpus:
            f.write(json.dumps(trace_to_record(trace), sort_keys=True) + "\n")
    return path


def normalize_steps(trace):
    """Convert a per-block numbered trace into the global step scope.

    Each block's local steps are offset by the maximum global step of all the earlier blocks, so
    the relative order of the steps inside a block is preserved exactly. A trace that is already
    global is returned unchanged.
    """
    if trace.step_scope is StepScope.GLOBAL:
        return trace

    offset = 0
    tokens = []
    for block_tokens in trace.tokens_by_block().values():
        block_max = offset
        for token in block_tokens:
            step = token.finalize_step + offset
            tokens.append(replace(token, finalize_step=step))
            block_max = max(block_max, step)
        offset = block_max

    return replace(trace, tokens=tuple(tokens), step_scope=StepScope.GLOBAL)


def normalize_corpus(corpus):
    """Apply :func:`normalize_steps` to every trace of a corpus."""
    return TraceCorpus(
        traces=tuple(normalize_steps(t) for t in corpus), provenance=corpus.provenance
    )
