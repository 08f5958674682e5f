"""Report files written by the command line interface.

Every report embeds the package version and the resolved configuration: JSON reports in their
``version`` and ``config`` entries, CSV files in ``# key: value`` comment lines and trace files in
a first ``{"header": ...}`` line.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from dataclasses import asdict
from pathlib import Path

from decoding_dynamics import __version__
from decoding_dynamics.metrics import GroupingSpec
from decoding_dynamics.metrics import aggregate
from decoding_dynamics.metrics import group_rows
from decoding_dynamics.metrics import label_avg_local_step
from decoding_dynamics.metrics import label_rows
from decoding_dynamics.metrics import mean_trajectories
from decoding_dynamics.metrics import parallel_combinations
from decoding_dynamics.metrics import trace_summary
from decoding_dynamics.metrics import trajectory_rows
from decoding_dynamics.trace import emit_traces
from decoding_dynamics.util import dump_json
from decoding_dynamics.util import write_csv

TRAJECTORY_COLUMNS = ["block_order", "block_index", "block_afp", "block_tau", "token_count"]
MEAN_TRAJECTORY_COLUMNS = [
    "block_order",
    "mean_block_afp",
    "mean_block_tau",
    "count",
    "excluded_tau_count",
]
GROUP_COLUMNS = ["mean_afp", "mean_tau", "count", "excluded_tau_count"]


def report_header(config):
    """The entries shared by every report."""
    return {"version": __version__, "config": config}


def corpus_summary(corpus, bucketing=None):
    """Mean metrics of a normalized corpus, overall and per group."""
    bucketing = bucketing or GroupingSpec()
    summaries = [trace_summary(t) for t in corpus]
    taus = [s.tau for s in summaries if s.tau is not None]
    return {
        "n_traces": len(summaries),
        "mean_afp": sum(float(s.afp) for s in summaries) / len(summaries) if summaries else None,
        "mean_tau": sum(taus) / len(taus) if taus else None,
        "excluded_tau_count": len(summaries) - len(taus),
        "groups": group_rows(aggregate(corpus, bucketing), bucketing),
    }


def write_metrics_report(corpus, out_dir, bucketing, config):
    """Write the grouped metrics, the label table, the trajectories and the combinations."""
    out_dir = Path(out_dir)
    header = report_header(config)
    keys = bucketing.columns

    write_csv(
        group_rows(aggregate(corpus, bucketing), bucketing),
        out_dir / "groups.csv",
        keys + GROUP_COLUMNS,
        header,
    )
    labels = label_avg_local_step(corpus)
    write_csv(
        label_rows(labels),
        out_dir / "labels.csv",
        ["label", "avg_local_step", "total_count"],
        {**header, "skipped_tokens": labels.skipped},
    )
    write_csv(
        trajectory_rows(corpus, bucketing),
        out_dir / "trajectories.csv",
        ["sample_id"] + keys + TRAJECTORY_COLUMNS,
        header,
    )
    write_csv(
        mean_trajectories(corpus, bucketing),
        out_dir / "mean_trajectories.csv",
        keys + MEAN_TRAJECTORY_COLUMNS,
        header,
    )
    write_csv(
        [
            {"tokens": " ".join(tokens), "size": len(tokens), "count": count}
            for tokens, count in parallel_combinations(corpus)
        ],
        out_dir / "combinations.csv",
        ["tokens", "size", "count"],
        header,
    )
    dump_json({**header, "summary": corpus_summary(corpus, bucketing)}, out_dir / "summary.json")


def write_traces(corpus, path, config):
    """Write a corpus preceded by the report header."""
    return emit_traces(corpus, path, header=report_header(config))


def write_theory_report(results, out_dir, config):
    """Write the pass/fail status of every property check."""
    report = {
        **report_header(config),
        "passed": all(r.passed for r in results),
        "results": [r.to_dict() for r in results],
    }
    return dump_json(report, Path(out_dir) / "theory_report.json")


def write_runtime_report(reports, skipped, out_dir, config):
    """Write the trade-off reports."""
    report = {
        **report_header(config),
        "skipped_m": skipped,
        "tradeoffs": [asdict(r) for r in reports],
    }
    return dump_json(report, Path(out_dir) / "runtime_report.json")
