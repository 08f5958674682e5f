"""Some utils used by the ``decoding-dynamics`` package."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

LOGGER = logging.getLogger("decoding-dynamics")

DEFAULT_SEED = 20240917


def derive_seed(seed, *keys):
    """Derive a deterministic child seed from a root seed and a sequence of integer keys.

    Args:
        seed (int): The root seed.
        *keys (int): The keys identifying the child (e.g. the index of a context).

    Returns:
        int: A 64-bit seed that only depends on ``seed`` and ``keys``.
    """
    sequence = np.random.SeedSequence([int(seed) % 2**64, *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def to_jsonable(value):
    """Convert numpy scalars, arrays, tuples and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dump_json(data, path):
    """Write a JSON report with sorted keys so that identical data gives identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    LOGGER.debug("Wrote %s", path)
    return path


def write_csv(rows, path, columns, header=None):
    """Write plot-ready rows into a CSV file preceded by ``# key: value`` comment lines.

    Args:
        rows (list(dict)): The rows to write.
        path (str): The output path.
        columns (list(str)): The column order.
        header (dict): (Optional) Entries written as comment lines before the CSV header. The
            file can be read back with ``pandas.read_csv(path, comment="#")``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(list(rows), columns=list(columns))
    with path.open("w", encoding="utf-8", newline="") as f:
        for key, value in (header or {}).items():
            f.write(f"# {key}: {json.dumps(to_jsonable(value), sort_keys=True)}\n")
        df.to_csv(f, index=False, lineterminator="\n")
    LOGGER.debug("Wrote %s rows into %s", len(df), path)
    return path


def violation_msg_formatter(
    check_name,
    reason=None,
    n_cases=None,
    generate_kwargs=None,
    evaluate_kwargs=None,
    report_kwargs=None,
):
    """Format a property violation message.

    Args:
        check_name (str): The name of the check that was run.
        reason (bool or str): If the reason is False, False is returned. If it is a str, a formatted
            message is returned.
        n_cases (int): (optional) The number of evaluated cases.
        generate_kwargs (dict): The kwargs used for generating the cases.
        evaluate_kwargs (dict): The kwargs used for evaluating the cases.
        report_kwargs (dict): The kwargs used for reporting the violations.

    Returns:
        False or the violation message.
    """
    if not reason:
        return False

    if reason is not None and reason is not True:
        reason_used = f"{reason}"
    else:
        reason_used = ""

    cases_used = f"Number of evaluated cases: {n_cases}\n" if n_cases is not None else ""

    def format_kwargs(kwargs, name):
        if kwargs:
            return f"Kwargs used for {name}: {kwargs}\n"
        return ""

    kwargs_used = "".join(
        i
        for i in [
            format_kwargs(generate_kwargs, "generating cases"),
            format_kwargs(evaluate_kwargs, "evaluating cases"),
            format_kwargs(report_kwargs, "reporting violations"),
        ]
        if i
    )

    eol = "."
    if reason_used or cases_used or kwargs_used:
        eol = ":\n"

    return f"The property '{check_name}' is violated{eol}{cases_used}{kwargs_used}{reason_used}"
