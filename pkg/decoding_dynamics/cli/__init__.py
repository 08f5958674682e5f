"""Main entry point of the Command Line Interface for the decoding-dynamics package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import functools
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np
from yaml import safe_load

from decoding_dynamics import get_checks
from decoding_dynamics import run_checks
from decoding_dynamics.checks import FAMILIES
from decoding_dynamics.decoder import ChooseRule
from decoding_dynamics.decoder import DecodeConfig
from decoding_dynamics.decoder import DecodeMode
from decoding_dynamics.decoder import batch_decode
from decoding_dynamics.decoder import load_model
from decoding_dynamics.decoder import random_table_model
from decoding_dynamics.decoder import save_model
from decoding_dynamics.exceptions import DecodingDynamicsError
from decoding_dynamics.metrics import GroupingSpec
from decoding_dynamics.metrics import afp
from decoding_dynamics.metrics import block_trajectories
from decoding_dynamics.metrics import kendall_tau
from decoding_dynamics.puzzles import PUZZLE_KINDS
from decoding_dynamics.puzzles import count_solutions
from decoding_dynamics.puzzles import generate_crossmath
from decoding_dynamics.puzzles import generate_sudoku
from decoding_dynamics.puzzles import solve_any_order
from decoding_dynamics.puzzles import solve_left_to_right
from decoding_dynamics.puzzles import to_decoding_trace
from decoding_dynamics.reports import corpus_summary
from decoding_dynamics.reports import report_header
from decoding_dynamics.reports import write_metrics_report
from decoding_dynamics.reports import write_runtime_report
from decoding_dynamics.reports import write_theory_report
from decoding_dynamics.reports import write_traces
from decoding_dynamics.runtime import load_runtime_spec
from decoding_dynamics.runtime import no_slowdown
from decoding_dynamics.runtime import tradeoff_table
from decoding_dynamics.trace import TraceCorpus
from decoding_dynamics.trace import ingest_traces
from decoding_dynamics.trace import normalize_corpus
from decoding_dynamics.util import DEFAULT_SEED
from decoding_dynamics.util import LOGGER
from decoding_dynamics.util import dump_json
from decoding_dynamics.util import to_jsonable
from decoding_dynamics.util import write_csv

# The first code of each family is for input or module errors, the second for failed properties
EXIT_CODES = {
    "metrics": 10,
    "simulate": 20,
    "verify-theory": 30,
    "puzzle": 40,
    "runtime": 50,
}


class PropertyViolation(Exception):
    """Some requested assertions do not hold."""


def setup_logger(level: str = "info"):
    """Setup application logger."""
    level = level.lower()
    levels = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "error": logging.ERROR,
        "critical": logging.CRITICAL,
    }
    logging.basicConfig(
        format="%(levelname)s - %(message)s",
        level=levels[level],
    )


def _normalize_keys(config):
    return {str(k).replace("-", "_"): v for k, v in config.items()}


def load_config(ctx, param, value):  # pylint: disable=unused-argument
    """Load configuration from the given JSON string or YAML file.

    Top-level scalar entries are defaults of every subcommand, mappings named after a subcommand
    are defaults of this subcommand only.
    """
    # pylint: disable=raise-missing-from
    ctx.config = {}
    if value is not None:
        try:
            ctx.config = json.loads(value)
        except Exception:  # pylint: disable=broad-exception-caught
            path = Path(value)
            if not path.exists():
                msg = f"The file '{path}' does not exist."
                raise click.BadParameter(msg)
            try:
                with path.open(encoding="utf-8") as f:
                    ctx.config = safe_load(f.read())
            except Exception:  # pylint: disable=broad-exception-caught
                msg = (
                    "Could not load the configuration because it could not be parsed as a JSON "
                    "string nor as a YAML file."
                )
                raise click.BadParameter(msg)
    if not isinstance(ctx.config, dict):
        raise click.BadParameter("The configuration must be a mapping.")
    shared = _normalize_keys({k: v for k, v in ctx.config.items() if not isinstance(v, dict)})
    sections = {
        name: ctx.config.get(name) or ctx.config.get(name.replace("-", "_")) or {}
        for name in EXIT_CODES
    }
    ctx.default_map = {
        **shared,
        **{name: {**shared, **_normalize_keys(section)} for name, section in sections.items()},
    }


def resolved_config(ctx):
    """The parameters of a subcommand as embedded in its reports (the output path excluded)."""
    config = {"command": ctx.info_name}
    for key, value in sorted(ctx.params.items()):
        if key == "out_dir":
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = [str(v) if isinstance(v, Path) else v for v in value]
        config[key] = value
    return to_jsonable(config)


def exit_codes(func):
    """Turn module errors and property violations into the exit codes of the subcommand."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        code = EXIT_CODES[ctx.info_name]
        try:
            return func(*args, **kwargs)
        except DecodingDynamicsError as exc:
            click.echo(f"[{exc.module}] {exc}", err=True)
            ctx.exit(code)
        except OSError as exc:
            click.echo(f"[{ctx.info_name}] {exc}", err=True)
            ctx.exit(code)
        except PropertyViolation as exc:
            click.echo(f"[{ctx.info_name}] {exc}", err=True)
            ctx.exit(code + 1)

    return wrapper


seed_option = click.option(
    "--seed",
    type=int,
    default=DEFAULT_SEED,
    show_default=True,
    help="The root seed of every random draw.",
)
out_dir_option = click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("out"),
    show_default=True,
    help="The directory in which the reports are written.",
)


@click.group()
@click.option(
    "-c",
    "--config",
    callback=load_config,
    is_eager=True,
    expose_value=False,
    show_default=True,
    help="Read option defaults from the given JSON string or the specified YAML file.",
)
@click.option(
    "--log-level",
    type=click.Choice(["debug", "info", "warning", "error", "critical"]),
    default="info",
    help="The logger level.",
)
@click.version_option(package_name="decoding-dynamics")
def main(log_level):
    """A command line tool to analyze the decoding dynamics of masked diffusion models."""
    setup_logger(log_level)

    LOGGER.debug("Running the following command: %s", " ".join(sys.argv))
    LOGGER.debug("Running from the following folder: %s", Path.cwd())


@main.command(short_help="Compute grouped metrics from a trace file")
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="The JSON-lines trace file.",
)
@out_dir_option
@click.option("--bucket", default=None, help="Block-count buckets, e.g. '1-2,3-4'.")
@click.option(
    "--group-by",
    multiple=True,
    type=click.Choice(["domain_tag", "correctness", "repetitive"]),
    help="The trace fields used to group the traces (all of them by default).",
)
@click.option("--metadata-key", multiple=True, help="Metadata entries added to the group key.")
@click.pass_context
@exit_codes
def metrics(ctx, input_path, out_dir, bucket, group_by, metadata_key):
    """Compute AFP, Kendall's tau, trajectories and label statistics of a trace file."""
    corpus = normalize_corpus(ingest_traces(input_path))
    bucketing = GroupingSpec(
        fields=group_by or GroupingSpec().fields,
        metadata_keys=metadata_key,
        block_buckets=GroupingSpec.parse_buckets(bucket),
    )
    write_metrics_report(corpus, out_dir, bucketing, resolved_config(ctx))
    LOGGER.info("Metrics of %s traces written into '%s'", len(corpus), out_dir)


def _decode_configs(modes, taus, choose_rule, forced_progress):
    for mode in modes:
        if DecodeMode(mode) is DecodeMode.THRESHOLD:
            if not taus:
                raise DecodingDynamicsError("The threshold mode needs --tau", module="decoder-sim")
            for tau in taus:
                yield f"threshold-{tau:g}/", DecodeConfig(
                    mode=mode,
                    tau_conf=tau,
                    choose_rule=choose_rule,
                    forced_progress=forced_progress,
                )
        else:
            yield f"{mode}/", DecodeConfig(
                mode=mode, choose_rule=choose_rule, forced_progress=forced_progress
            )


def _schedule_violations(corpus, block_size):
    errors = []
    for trace in corpus:
        mode = DecodeMode(trace.metadata["mode"])
        if [t.block_index for t in trace.tokens] != [i // block_size for i in range(len(trace))]:
            errors.append(f"{trace.sample_id}: block boundaries do not match B={block_size}")
        if mode in (DecodeMode.AR_BASELINE, DecodeMode.TOP1) and afp(trace.steps) != 1:
            errors.append(f"{trace.sample_id}: AFP is not 1")
        if mode is DecodeMode.AR_BASELINE and len(trace) > 1 and kendall_tau(trace.steps) != 1:
            errors.append(f"{trace.sample_id}: Kendall tau is not 1")
        if mode is DecodeMode.ACCEPT_ALL and any(
            b.block_afp != b.token_count for b in block_trajectories(trace)
        ):
            errors.append(f"{trace.sample_id}: a block is not finalized in a single step")
    return errors


@main.command(short_help="Decode table models and record the traces")
@seed_option
@out_dir_option
@click.option(
    "--model",
    "model_paths",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Model files (one per context); a random model is drawn if not given.",
)
@click.option("--vocab", type=int, default=3, show_default=True, help="Vocabulary size.")
@click.option("--length", type=int, default=6, show_default=True, help="Sequence length.")
@click.option("--block-size", type=int, default=3, show_default=True, help="Block size.")
@click.option("--contexts", type=int, default=10, show_default=True, help="Number of contexts.")
@click.option(
    "--concentration",
    type=float,
    default=1.0,
    show_default=True,
    help="Dirichlet concentration of the random model.",
)
@click.option(
    "--mode",
    "modes",
    multiple=True,
    type=click.Choice([m.value for m in DecodeMode]),
    default=("top1",),
    show_default=True,
    help="The decoding modes.",
)
@click.option("--tau", "taus", multiple=True, type=float, help="Thresholds of the threshold mode.")
@click.option(
    "--choose-rule",
    type=click.Choice([r.value for r in ChooseRule]),
    default="greedy",
    show_default=True,
    help="How the finalized values are chosen.",
)
@click.option(
    "--forced-progress/--no-forced-progress",
    default=True,
    show_default=True,
    help="Finalize the most confident position when the threshold selects nothing.",
)
@click.pass_context
@exit_codes
def simulate(
    ctx,
    seed,
    out_dir,
    model_paths,
    vocab,
    length,
    block_size,
    contexts,
    concentration,
    modes,
    taus,
    choose_rule,
    forced_progress,
):
    """Decode table models with the requested schedules and summarize the traces."""
    config = resolved_config(ctx)
    if model_paths:
        model = load_model(model_paths)
        context_ids = model.context_ids
    else:
        rng = np.random.default_rng(seed)
        model = random_table_model(rng, vocab, length, block_size, contexts, concentration)
        context_ids = model.context_ids
        save_model(model, out_dir / "model")

    traces = []
    for prefix, decode_config in _decode_configs(modes, taus, choose_rule, forced_progress):
        traces.extend(batch_decode(model, decode_config, context_ids, seed=seed, prefix=prefix))
    corpus = TraceCorpus(tuple(traces), provenance="simulate")

    write_traces(corpus, out_dir / "traces.jsonl", config)
    bucketing = GroupingSpec(fields=("domain_tag",), metadata_keys=("mode", "tau_conf"))
    summary = corpus_summary(corpus, bucketing)
    dump_json({**report_header(config), "summary": summary}, out_dir / "summary.json")
    LOGGER.info("Mean AFP: %s, mean Kendall tau: %s", summary["mean_afp"], summary["mean_tau"])

    errors = _schedule_violations(corpus, model.block_size)
    if errors:
        raise PropertyViolation("\n".join(errors))


def _parse_check_cases(values):
    res = {}
    for value in values:
        name, _, count = value.partition("=")
        try:
            res[name] = int(count)
        except ValueError as exc:
            raise click.BadParameter(f"Expected NAME=COUNT (got '{value}')") from exc
    return res


@main.command("verify-theory", short_help="Run the property checks")
@seed_option
@out_dir_option
@click.option(
    "--family",
    "families",
    multiple=True,
    type=click.Choice(FAMILIES),
    help="Only run the checks of these families.",
)
@click.option("--check", "names", multiple=True, help="Only run these checks.")
@click.option("--n-cases", type=int, default=None, help="Number of cases of every check.")
@click.option(
    "--check-cases",
    multiple=True,
    help="Number of cases of one check, as NAME=COUNT (overrides --n-cases).",
)
@click.pass_context
@exit_codes
def verify_theory(ctx, seed, out_dir, families, names, n_cases, check_cases):
    """Verify the properties of every module on random instances."""
    counts = _parse_check_cases(check_cases)
    checks = get_checks()
    unknown = sorted(set(names).union(counts).difference(checks))
    if unknown:
        raise DecodingDynamicsError(f"Unknown checks: {unknown}", module="cli-reports")
    if counts:
        n_cases = {name: counts.get(name, n_cases) for name in checks}
    results = run_checks(
        names=list(names) or None,
        families=list(families) or None,
        seed=seed,
        n_cases=n_cases,
    )
    write_theory_report(results, out_dir, resolved_config(ctx))
    failures = [r for r in results if not r.passed]
    if failures:
        raise PropertyViolation("\n\n".join(r.message for r in failures))
    LOGGER.info("All the %s checks passed", len(results))


def _generate(kind, seed, givens, max_value):
    if kind == "sudoku":
        generation = generate_sudoku(seed, givens)
    else:
        generation = generate_crossmath(seed, max_value)
    return generation.puzzle, generation.solution


@main.command(short_help="Generate and solve puzzles")
@seed_option
@out_dir_option
@click.option(
    "--kind",
    type=click.Choice(sorted(PUZZLE_KINDS)),
    default="sudoku",
    show_default=True,
    help="The kind of puzzle.",
)
@click.option("--count", type=int, default=10, show_default=True, help="Number of puzzles.")
@click.option(
    "--givens", type=int, default=30, show_default=True, help="Givens target of the Sudoku."
)
@click.option(
    "--max-value",
    type=int,
    default=99,
    show_default=True,
    help="Largest number of the cross-math grids.",
)
@click.pass_context
@exit_codes
def puzzle(ctx, seed, out_dir, kind, count, givens, max_value):
    """Generate puzzles, solve them with every strategy and measure the solve orders."""
    config = resolved_config(ctx)
    rng = np.random.default_rng(seed)
    traces = []
    rows = []
    errors = []
    for index in range(count):
        puzzle_seed = int(rng.integers(2**31))
        grid, solution = _generate(kind, puzzle_seed, givens, max_value)
        grid.save(out_dir / "puzzles" / f"{kind}_{index:03d}.txt")
        solution.save(out_dir / "solutions" / f"{kind}_{index:03d}.txt")
        if count_solutions(grid, cutoff=2) != 1:
            errors.append(f"{kind} {index}: the solution is not unique")
        for strategy, solved_and_order in (
            ("any_order", solve_any_order(grid)),
            ("parallel_wave", solve_any_order(grid, parallel_wave=True)),
            ("left_to_right", solve_left_to_right(grid)),
        ):
            solved, order = solved_and_order
            errors.extend(f"{kind} {index} {strategy}: {e}" for e in grid.verify_solution(solved))
            if not order.entries:
                continue
            trace = to_decoding_trace(
                order,
                sample_id=f"{kind}_{index:03d}/{strategy}",
                domain_tag=kind,
                metadata={"seed": puzzle_seed},
            )
            traces.append(trace)
            tau = kendall_tau(trace.steps) if len(trace) > 1 else None
            if strategy == "left_to_right" and tau not in (None, 1.0):
                errors.append(f"{kind} {index}: the left-to-right order has tau {tau}")
            rows.append(
                {
                    "puzzle": index,
                    "seed": puzzle_seed,
                    "strategy": strategy,
                    "blanks": len(trace),
                    "steps": len(set(trace.steps)),
                    "afp": float(afp(trace.steps)),
                    "tau": tau,
                    "branch_points": trace.metadata["branch_points"],
                }
            )

    corpus = TraceCorpus(tuple(traces), provenance=f"puzzle {kind}")
    write_traces(corpus, out_dir / "traces.jsonl", config)
    header = report_header(config)
    write_csv(
        rows,
        out_dir / "solve_orders.csv",
        ["puzzle", "seed", "strategy", "blanks", "steps", "afp", "tau", "branch_points"],
        header,
    )
    bucketing = GroupingSpec(fields=("domain_tag",), metadata_keys=("strategy",))
    dump_json(
        {**header, "summary": corpus_summary(corpus, bucketing)}, out_dir / "summary.json"
    )
    if errors:
        raise PropertyViolation("\n".join(errors))


@main.command(short_help="Evaluate the runtime trade-off")
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="The runtime spec file.",
)
@out_dir_option
@click.option(
    "--delta",
    "deltas",
    multiple=True,
    type=float,
    default=(0.01,),
    show_default=True,
    help="Target total variation distances.",
)
@click.option("--m", "stage_counts", multiple=True, type=int, help="Stage counts to evaluate.")
@click.option("--m0", type=int, default=None, help="Override the baseline stage count.")
@click.pass_context
@exit_codes
def runtime(ctx, input_path, out_dir, deltas, stage_counts, m0):
    """Evaluate the no-slowdown condition of a runtime spec file."""
    spec = load_runtime_spec(input_path)
    if m0 is not None:
        spec = replace(spec, m0=m0)
    reports = []
    skipped = []
    for delta in deltas:
        if stage_counts:
            reports.extend(no_slowdown(spec, m, delta) for m in stage_counts)
        else:
            delta_reports, skipped = tradeoff_table(spec, delta)
            reports.extend(delta_reports)
    write_runtime_report(reports, skipped, out_dir, resolved_config(ctx))
    for report in reports:
        LOGGER.info(
            "m=%s, delta=%s: %s -> %s",
            report.m,
            report.delta,
            report.binding_inequality,
            "no slowdown" if report.no_slowdown else "slowdown",
        )
    # The round count must reach the target distance
    broken = [r for r in reports if spec.d0 * r.alpha**r.k_rounds > r.delta * (1 + 1e-9)]
    if broken:
        raise PropertyViolation(
            f"The editing rounds miss the target for m in {[r.m for r in broken]}"
        )
