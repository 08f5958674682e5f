"""A block-diffusion decoder over exact table models.

The sequence is decoded block by block. Inside a block every step computes the exact conditional
of each masked position given the committed tokens, selects an update set from the confidences
(the raw maximum probabilities) and commits all the selected positions at once. Committed tokens
are never changed.

Model files use the joint-table text format preceded by a ``B <block size>`` line.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from decoding_dynamics.distributions import JointTable
from decoding_dynamics.distributions import format_joint
from decoding_dynamics.distributions import marginal
from decoding_dynamics.distributions import parse_joint
from decoding_dynamics.distributions import random_joint
from decoding_dynamics.exceptions import DecodingStalledError
from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.metrics import afp
from decoding_dynamics.trace import DecodingTrace
from decoding_dynamics.trace import StepScope
from decoding_dynamics.trace import TraceCorpus
from decoding_dynamics.trace import TraceToken
from decoding_dynamics.util import DEFAULT_SEED
from decoding_dynamics.util import LOGGER
from decoding_dynamics.util import derive_seed

MASK = None


class TableLanguageModel:
    """Exact block-conditional model built from one master joint table per context.

    Args:
        joints (dict): Mapping from context id to a :class:`JointTable` over ``V**L``.
        block_size (int): The block size ``B``; it must divide ``L``.
    """

    def __init__(self, joints, block_size):
        if not joints:
            raise DomainError("A table model needs at least one context", module="decoder-sim")
        shapes = {(j.vocab_size, j.length) for j in joints.values()}
        if len(shapes) != 1:
            raise DomainError(
                f"All the contexts must share the same shape (got {sorted(shapes)})",
                module="decoder-sim",
            )
        self.vocab_size, self.length = shapes.pop()
        if block_size < 1 or self.length % block_size:
            raise DomainError(
                f"The block size {block_size} does not divide the length {self.length}",
                module="decoder-sim",
            )
        self.block_size = int(block_size)
        self.joints = {str(k): v for k, v in joints.items()}
        self._prefix_marginals = {}
        self._conditionals = {}

    def __repr__(self):
        return (
            f"TableLanguageModel(V={self.vocab_size}, L={self.length}, B={self.block_size}, "
            f"contexts={len(self.joints)})"
        )

    @property
    def block_count(self):
        """The number of blocks ``L / B``."""
        return self.length // self.block_size

    @property
    def context_ids(self):
        return list(self.joints)

    def joint(self, context_id):
        """The master joint table of a context."""
        try:
            return self.joints[str(context_id)]
        except KeyError as exc:
            raise DomainError(f"Unknown context '{context_id}'", module="decoder-sim") from exc

    def block_sites(self, block):
        """The positions of a block."""
        return range(block * self.block_size, (block + 1) * self.block_size)

    def block_conditional(self, context_id, block, prefix):
        """The joint table of block ``block`` given the committed tokens of the earlier blocks.

        A prefix with zero probability gives the uniform distribution.
        """
        prefix = tuple(int(v) for v in prefix)
        if len(prefix) != block * self.block_size:
            raise DomainError(
                f"Block {block} needs a prefix of {block * self.block_size} tokens "
                f"(got {len(prefix)})",
                module="decoder-sim",
            )
        key = (str(context_id), block, prefix)
        if key not in self._conditionals:
            cache_key = (str(context_id), block)
            if cache_key not in self._prefix_marginals:
                sites = range((block + 1) * self.block_size)
                self._prefix_marginals[cache_key] = marginal(self.joint(context_id), sites).probs
            probs = self._prefix_marginals[cache_key][prefix]
            total = probs.sum()
            if total > 0:
                probs = probs / total
            else:
                probs = np.full(probs.shape, 1.0 / probs.size)
            self._conditionals[key] = JointTable(probs, context_id=f"{context_id}/block{block}")
        return self._conditionals[key]


def random_table_model(rng, vocab_size, length, block_size, contexts=1, concentration=1.0):
    """Draw a table model whose master joints come from a symmetric Dirichlet distribution."""
    joints = {
        f"c{i}": random_joint(rng, vocab_size, length, concentration, context_id=f"c{i}")
        for i in range(contexts)
    }
    return TableLanguageModel(joints, block_size)


def parse_model(text, context_id):
    """Parse the model text format of one context."""
    lines = text.strip().splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 2 or header[0] != "B":
        raise DomainError(
            "A model file must start with a 'B <block size>' line", module="decoder-sim"
        )
    joint = parse_joint("\n".join(lines[1:]), context_id=context_id)
    return TableLanguageModel({context_id: joint}, int(header[1]))


def load_model(paths):
    """Load a model from one file per context; each context id is the file stem."""
    joints = {}
    block_sizes = set()
    for path in paths:
        path = Path(path)
        model = parse_model(path.read_text(encoding="utf-8"), path.stem)
        joints.update(model.joints)
        block_sizes.add(model.block_size)
    if len(block_sizes) > 1:
        raise DomainError(
            f"The model files disagree on the block size: {sorted(block_sizes)}",
            module="decoder-sim",
        )
    return TableLanguageModel(joints, block_sizes.pop() if block_sizes else 1)


def save_model(model, directory):
    """Write one model file per context into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for context_id, joint in model.joints.items():
        path = directory / f"{context_id}.txt"
        path.write_text(f"B {model.block_size}\n{format_joint(joint)}", encoding="utf-8")
        paths.append(path)
    return paths


class DecodeMode(str, Enum):
    """How the update set of a step is selected."""

    THRESHOLD = "threshold"
    ACCEPT_ALL = "accept_all"
    TOP1 = "top1"
    AR_BASELINE = "ar_baseline"


class ChooseRule(str, Enum):
    """How the value of a finalized position is chosen."""

    GREEDY = "greedy"
    SAMPLE = "sample"


@dataclass(frozen=True)
class DecodeConfig:
    """Decoding schedule.

    Args:
        mode (DecodeMode): The selection mode.
        tau_conf (float): The confidence threshold, strictly between 0 and 1; only used by
            ``THRESHOLD`` (``ACCEPT_ALL`` stands for a zero threshold).
        choose_rule (ChooseRule): Greedy argmax or sampling.
        forced_progress (bool): If True, a threshold step that selects nothing finalizes the most
            confident position instead.
        domain_tag (str): The domain tag given to the produced traces.
    """

    mode: DecodeMode = DecodeMode.TOP1
    tau_conf: Optional[float] = None
    choose_rule: ChooseRule = ChooseRule.GREEDY
    forced_progress: bool = True
    domain_tag: str = "simulated"

    def __post_init__(self):
        object.__setattr__(self, "mode", DecodeMode(self.mode))
        object.__setattr__(self, "choose_rule", ChooseRule(self.choose_rule))
        if self.mode is DecodeMode.THRESHOLD:
            if self.tau_conf is None or not 0 < self.tau_conf < 1:
                raise DomainError(
                    f"The threshold tau_conf must be in (0, 1) (got {self.tau_conf})",
                    module="decoder-sim",
                )
            object.__setattr__(self, "tau_conf", float(self.tau_conf))
        elif self.tau_conf is not None:
            raise DomainError(
                f"tau_conf is only used by the threshold mode (mode is {self.mode.value})",
                module="decoder-sim",
            )

    def metadata(self):
        """The entries written in the trace metadata."""
        return {
            "mode": self.mode.value,
            "tau_conf": self.tau_conf,
            "choose_rule": self.choose_rule.value,
            "forced_progress": self.forced_progress,
            "confidence": "raw_max_probability",
        }


@dataclass
class MaskedState:
    """The partially decoded sequence; masked positions hold ``MASK``."""

    values: list
    block: int = 0
    step: int = 0
    finalize_steps: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, length):
        return cls(values=[MASK] * length)

    def masked(self, sites):
        return [i for i in sites if self.values[i] is MASK]

    def commit(self, values):
        """Finalize positions in one step."""
        self.step += 1
        for position, value in values.items():
            if self.values[position] is not MASK:
                raise DomainError(f"The position {position} is already committed")
            self.values[position] = int(value)
            self.finalize_steps[position] = self.step


def _position_marginals(block_joint, committed, masked, offset):
    """Exact marginals of the masked positions given the committed positions of the block."""
    index = tuple(
        committed.get(offset + i, slice(None)) for i in range(block_joint.length)
    )
    restricted = block_joint.probs[index]
    total = restricted.sum()
    if total > 0:
        restricted = restricted / total
    else:
        restricted = np.full(restricted.shape, 1.0 / restricted.size)
    marginals = {}
    for axis, position in enumerate(masked):
        others = tuple(a for a in range(restricted.ndim) if a != axis)
        marginals[position] = restricted.sum(axis=others)
    return marginals


def _select(config, confidences):
    """Return the update set of a step and whether progress was forced."""
    positions = sorted(confidences)
    if config.mode is DecodeMode.AR_BASELINE:
        return [positions[0]], False
    if config.mode is DecodeMode.ACCEPT_ALL:
        return positions, False
    best = max(positions, key=lambda p: (confidences[p], -p))
    if config.mode is DecodeMode.TOP1:
        return [best], False
    selected = [p for p in positions if confidences[p] >= config.tau_conf]
    if selected:
        return selected, False
    if not config.forced_progress:
        raise DecodingStalledError(
            f"No masked position reaches the threshold {config.tau_conf} "
            f"(best confidence: {confidences[best]:.6g})"
        )
    return [best], True


def decode(model, config, context_id, seed=None, sample_id=None):
    """Decode one sequence.

    Args:
        model (TableLanguageModel): The model.
        config (DecodeConfig): The schedule.
        context_id (str): The context to decode.
        seed (int): The seed of the sampling rule (unused by the greedy rule).
        sample_id (str): (Optional) The sample id of the trace, defaults to the context id.

    Returns:
        tuple(tuple(int), DecodingTrace): The decoded sequence and its trace.
    """
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    state = MaskedState.empty(model.length)
    forced_steps = []
    for block in range(model.block_count):
        state.block = block
        sites = model.block_sites(block)
        offset = sites[0]
        block_joint = model.block_conditional(context_id, block, state.values[:offset])
        while True:
            masked = state.masked(sites)
            if not masked:
                break
            committed = {i: state.values[i] for i in sites if state.values[i] is not MASK}
            marginals = _position_marginals(block_joint, committed, masked, offset)
            confidences = {p: float(q.max()) for p, q in marginals.items()}
            selected, forced = _select(config, confidences)
            if config.choose_rule is ChooseRule.GREEDY:
                values = {p: int(np.argmax(marginals[p])) for p in selected}
            else:
                values = {p: int(rng.choice(model.vocab_size, p=marginals[p])) for p in selected}
            state.commit(values)
            if forced:
                forced_steps.append(state.step)
    if forced_steps:
        LOGGER.warning(
            "Forced progress at steps %s while decoding %s", forced_steps, sample_id or context_id
        )

    tokens = tuple(
        TraceToken(
            position=i,
            finalize_step=state.finalize_steps[i],
            block_index=i // model.block_size,
            text=str(state.values[i]),
        )
        for i in range(model.length)
    )
    metadata = {
        **config.metadata(),
        "context_id": str(context_id),
        "block_size": model.block_size,
        "forced_steps": forced_steps,
    }
    trace = DecodingTrace(
        sample_id=sample_id or str(context_id),
        tokens=tokens,
        step_scope=StepScope.GLOBAL,
        domain_tag=config.domain_tag,
        metadata=metadata,
    )
    return tuple(state.values), trace


def batch_decode(model, config, contexts, seed=DEFAULT_SEED, prefix=""):
    """Decode a list of contexts with per-context seeds derived from ``(seed, index)``.

    The sample ids are ``<prefix><context id>-<index>``.
    """
    traces = []
    for index, context_id in enumerate(contexts):
        _, trace = decode(
            model,
            config,
            context_id,
            seed=derive_seed(seed, index),
            sample_id=f"{prefix}{context_id}-{index}",
        )
        traces.append(trace)
    LOGGER.info("Decoded %s contexts in %s mode", len(traces), config.mode.value)
    return TraceCorpus(traces=tuple(traces), provenance=f"decoder-sim seed={seed}")


@dataclass(frozen=True)
class ScheduleReport:
    """AFP of greedy threshold decoding over a grid of thresholds."""

    context_id: str
    rows: tuple
    violations: tuple

    @property
    def monotone(self):
        """True if raising the threshold never increased the AFP."""
        return not self.violations


def afp_schedule(model, taus, context_id):
    """Greedy threshold decoding of one context for each threshold of ``taus``.

    Returns:
        ScheduleReport: ``rows`` are ``(tau, afp)`` pairs in increasing threshold order and
        ``violations`` the consecutive pairs where the AFP increased.
    """
    rows = []
    for tau in sorted(taus):
        config = DecodeConfig(mode=DecodeMode.THRESHOLD, tau_conf=tau)
        _, trace = decode(model, config, context_id)
        rows.append((float(tau), afp(trace.steps)))
    violations = tuple(
        (low, high) for (low, a_low), (high, a_high) in zip(rows, rows[1:]) if a_high > a_low
    )
    return ScheduleReport(context_id=str(context_id), rows=tuple(rows), violations=violations)
