"""Parallelism and order metrics computed from decoding traces.

* AFP (Average Finalization Parallelism) is the number of tokens divided by the number of distinct
  steps that finalize at least one token.
* Kendall's tau correlates token positions with finalization steps; tied steps count neither as
  concordant nor as discordant and the denominator is always ``n(n-1)/2``.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import UndefinedMetricError
from decoding_dynamics.trace import StepScope
from decoding_dynamics.util import LOGGER

GROUP_FIELDS = ("domain_tag", "correctness", "repetitive")
_bucket_pattern = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")


def afp(steps):
    """Compute the Average Finalization Parallelism of a list of finalization steps.

    Returns:
        fractions.Fraction: ``n / T_eff`` where ``T_eff`` is the number of distinct steps.
    """
    steps = list(steps)
    if not steps:
        raise DomainError("AFP is not defined for an empty step list", module="metrics")
    return Fraction(len(steps), len(set(steps)))


def _concordance(steps):
    """Return ``C - D`` over all pairs ``i < j``."""
    values = np.asarray(steps, dtype=np.int64)
    signs = np.sign(values[None, :] - values[:, None])
    return int(np.triu(signs, k=1).sum())


def kendall_tau(steps):
    """Compute Kendall's tau between positions and finalization steps.

    Args:
        steps (list(int)): The finalization steps indexed by position.

    Returns:
        float: ``(C - D) / (n(n-1)/2)`` in ``[-1, 1]``.
    """
    steps = list(steps)
    n = len(steps)
    if n < 2:
        raise UndefinedMetricError(f"Kendall's tau needs at least 2 tokens (got {n})")
    return _concordance(steps) / (n * (n - 1) / 2)


def _tau_or_none(steps):
    return kendall_tau(steps) if len(steps) >= 2 else None


def _require_global(trace):
    if trace.step_scope is not StepScope.GLOBAL:
        raise DomainError(
            f"The trace '{trace.sample_id}' must be normalized to the global step scope",
            module="metrics",
        )


@dataclass(frozen=True)
class BlockTrajectory:
    """The metrics of one block of a trace; ``block_tau`` is ``None`` when undefined."""

    block_index: int
    block_afp: Fraction
    block_tau: Optional[float]
    token_count: int


@dataclass(frozen=True)
class TraceSummary:
    """Whole-trace metrics; ``tau`` is ``None`` when undefined."""

    sample_id: str
    n: int
    block_count: int
    afp: Fraction
    tau: Optional[float]


def trace_summary(trace):
    """Compute AFP and Kendall's tau over all the tokens of a normalized trace."""
    _require_global(trace)
    steps = trace.steps
    return TraceSummary(
        sample_id=trace.sample_id,
        n=len(steps),
        block_count=trace.block_count,
        afp=afp(steps),
        tau=_tau_or_none(steps),
    )


def block_trajectories(trace):
    """Compute the intra-block AFP and tau of each block, in block order."""
    _require_global(trace)
    return [
        BlockTrajectory(
            block_index=block,
            block_afp=afp(steps),
            block_tau=_tau_or_none(steps),
            token_count=len(steps),
        )
        for block, steps in trace.steps_by_block().items()
    ]


@dataclass(frozen=True)
class GroupingSpec:
    """How traces are grouped by :func:`aggregate`.

    Args:
        fields (tuple(str)): Trace fields used in the key (among ``GROUP_FIELDS``).
        metadata_keys (tuple(str)): Metadata entries added to the key (e.g. ``mode``).
        block_buckets (tuple(tuple(int, int))): Inclusive block-count ranges; ``None`` disables
            the bucketing. Traces outside every range are put in the ``other`` bucket.
    """

    fields: tuple = GROUP_FIELDS
    metadata_keys: tuple = ()
    block_buckets: Optional[tuple] = None

    def __post_init__(self):
        unknown = set(self.fields) - set(GROUP_FIELDS)
        if unknown:
            raise DomainError(f"Unknown grouping fields: {sorted(unknown)}", module="metrics")
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "metadata_keys", tuple(self.metadata_keys))
        if self.block_buckets is not None:
            buckets = tuple((int(lo), int(hi)) for lo, hi in self.block_buckets)
            for lo, hi in buckets:
                if lo < 1 or hi < lo:
                    raise DomainError(f"Invalid block bucket {lo}-{hi}", module="metrics")
            object.__setattr__(self, "block_buckets", buckets)

    @classmethod
    def parse_buckets(cls, text):
        """Parse a bucket specification like ``"1-2,3-4"``."""
        if not text:
            return None
        buckets = []
        for item in text.split(","):
            match = _bucket_pattern.match(item)
            if match is None:
                raise DomainError(f"Could not parse the block bucket '{item}'", module="metrics")
            buckets.append((int(match.group(1)), int(match.group(2))))
        return tuple(buckets)

    @property
    def columns(self):
        """The names of the key components."""
        cols = list(self.fields) + list(self.metadata_keys)
        if self.block_buckets is not None:
            cols.append("block_bucket")
        return cols

    def bucket_of(self, block_count):
        """Return the label of the bucket of a block count."""
        for lo, hi in self.block_buckets:
            if lo <= block_count <= hi:
                return f"{lo}-{hi}"
        return "other"

    def key_of(self, trace):
        """Return the group key of a trace as a tuple of strings."""
        key = []
        for name in self.fields:
            value = getattr(trace, name)
            if name == "correctness":
                value = value.value
            elif name == "repetitive":
                value = str(value).lower()
            key.append("" if value is None else str(value))
        for name in self.metadata_keys:
            value = trace.metadata.get(name)
            key.append("" if value is None else str(value))
        if self.block_buckets is not None:
            key.append(self.bucket_of(trace.block_count))
        return tuple(key)


@dataclass(frozen=True)
class GroupSummary:
    """Aggregated metrics of one group of traces."""

    group_key: tuple
    mean_afp: float
    mean_tau: Optional[float]
    count: int
    excluded_tau_count: int = 0


def aggregate(corpus, bucketing=None):
    """Group the traces of a normalized corpus and average their metrics.

    The means are unweighted over traces. Traces whose tau is undefined are excluded from
    ``mean_tau`` and counted in ``excluded_tau_count``.

    Returns:
        list(GroupSummary): One entry per group, sorted by group key.
    """
    bucketing = bucketing or GroupingSpec()
    sums = {}
    for trace in corpus:
        summary = trace_summary(trace)
        key = bucketing.key_of(trace)
        afp_sum, tau_sum, count, tau_count = sums.get(key, (Fraction(0), 0, 0, 0))
        if summary.tau is None:
            sums[key] = (afp_sum + summary.afp, tau_sum, count + 1, tau_count)
        else:
            sums[key] = (afp_sum + summary.afp, tau_sum + summary.tau, count + 1, tau_count + 1)

    res = []
    for key in sorted(sums):
        afp_sum, tau_sum, count, tau_count = sums[key]
        res.append(
            GroupSummary(
                group_key=key,
                mean_afp=float(afp_sum / count),
                mean_tau=tau_sum / tau_count if tau_count else None,
                count=count,
                excluded_tau_count=count - tau_count,
            )
        )
    LOGGER.debug("Aggregated %s traces into %s groups", len(corpus), len(res))
    return res


def group_rows(summaries, bucketing=None):
    """Convert :class:`GroupSummary` objects into plot-ready rows."""
    bucketing = bucketing or GroupingSpec()
    rows = []
    for summary in summaries:
        row = dict(zip(bucketing.columns, summary.group_key))
        row.update(
            {
                "mean_afp": summary.mean_afp,
                "mean_tau": summary.mean_tau,
                "count": summary.count,
                "excluded_tau_count": summary.excluded_tau_count,
            }
        )
        rows.append(row)
    return rows


def trajectory_rows(corpus, bucketing=None):
    """Return one row per (trace, block) with the intra-block metrics and the group fields."""
    bucketing = bucketing or GroupingSpec()
    rows = []
    for trace in corpus:
        key = dict(zip(bucketing.columns, bucketing.key_of(trace)))
        for position, traj in enumerate(block_trajectories(trace)):
            rows.append(
                {
                    "sample_id": trace.sample_id,
                    **key,
                    "block_order": position,
                    "block_index": traj.block_index,
                    "block_afp": float(traj.block_afp),
                    "block_tau": traj.block_tau,
                    "token_count": traj.token_count,
                }
            )
    return rows


def mean_trajectories(corpus, bucketing=None):
    """Average the block trajectories of each group by block order (first block, second, ...).

    Returns:
        list(dict): Rows with the group fields, ``block_order``, ``mean_block_afp``,
        ``mean_block_tau`` (undefined taus excluded), ``count`` and ``excluded_tau_count``.
    """
    bucketing = bucketing or GroupingSpec()
    sums = {}
    for trace in corpus:
        key = bucketing.key_of(trace)
        for position, traj in enumerate(block_trajectories(trace)):
            entry = sums.setdefault((key, position), [Fraction(0), 0.0, 0, 0])
            entry[0] += traj.block_afp
            entry[2] += 1
            if traj.block_tau is not None:
                entry[1] += traj.block_tau
                entry[3] += 1
    rows = []
    for (key, position), (afp_sum, tau_sum, count, tau_count) in sorted(sums.items()):
        rows.append(
            {
                **dict(zip(bucketing.columns, key)),
                "block_order": position,
                "mean_block_afp": float(afp_sum / count),
                "mean_block_tau": tau_sum / tau_count if tau_count else None,
                "count": count,
                "excluded_tau_count": count - tau_count,
            }
        )
    return rows


@dataclass(frozen=True)
class LabelStat:
    """Average local step of one label."""

    label: str
    avg_local_step: float
    total_count: int


@dataclass(frozen=True)
class LabelTable:
    """Result of :func:`label_avg_local_step`."""

    entries: tuple
    skipped: int

    def as_dict(self):
        """Return a mapping ``label -> (avg_local_step, total_count)``."""
        return {e.label: (e.avg_local_step, e.total_count) for e in self.entries}


def local_steps(steps):
    """Dense ranks of the steps of one block, starting from 1; tied steps share a rank."""
    return [int(r) for r in rankdata(steps, method="dense")]


def label_avg_local_step(corpus):
    """Average the local step of each label over the whole corpus.

    The local step of a token is the dense rank of its finalization step inside its block. Tokens
    without label are skipped and counted.

    Returns:
        LabelTable: Entries sorted by ascending average (then label).
    """
    sums = Counter()
    counts = Counter()
    skipped = 0
    for trace in corpus:
        for tokens in trace.tokens_by_block().values():
            ranks = local_steps([t.finalize_step for t in tokens])
            for token, rank in zip(tokens, ranks):
                if token.label is None:
                    skipped += 1
                    continue
                sums[token.label] += rank
                counts[token.label] += 1
    entries = [
        LabelStat(
            label=label, avg_local_step=sums[label] / counts[label], total_count=counts[label]
        )
        for label in counts
    ]
    entries.sort(key=lambda e: (e.avg_local_step, e.label))
    if skipped:
        LOGGER.debug("Skipped %s tokens without label", skipped)
    return LabelTable(entries=tuple(entries), skipped=skipped)


def label_rows(table):
    """Convert a :class:`LabelTable` into plot-ready rows."""
    return [
        {"label": e.label, "avg_local_step": e.avg_local_step, "total_count": e.total_count}
        for e in table.entries
    ]


def parallel_combinations(corpus, min_size=2):
    """Count the token-text combinations finalized together in one step.

    Only tokens with a text are considered; the texts of one step are joined in position order.

    Returns:
        list(tuple(tuple(str), int)): Combinations sorted by descending count, then content.
    """
    counter = Counter()
    for trace in corpus:
        by_step = {}
        for token in trace.tokens:
            if token.text is not None:
                by_step.setdefault(token.finalize_step, []).append(token.text)
        for texts in by_step.values():
            if len(texts) >= min_size:
                counter[tuple(texts)] += 1
    return sorted(counter.items(), key=lambda item: (-item[1], item[0]))
