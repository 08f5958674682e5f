"""Checks of the puzzle generators and of the solve orders."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from abc import abstractmethod
from statistics import fmean

from decoding_dynamics import register_check
from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.metrics import afp
from decoding_dynamics.metrics import kendall_tau
from decoding_dynamics.puzzles import count_solutions
from decoding_dynamics.puzzles import generate_crossmath
from decoding_dynamics.puzzles import generate_sudoku
from decoding_dynamics.puzzles import solve_any_order
from decoding_dynamics.puzzles import solve_left_to_right


def _order_metrics(solve):
    steps = solve.steps
    if len(steps) < 2:
        return float(afp(steps)) if steps else None, None
    return float(afp(steps)), kendall_tau(steps)


class BasePuzzleCheck(BaseCheck):
    """Generated puzzles are unique and every strategy returns the same valid solution."""

    family = "puzzles"
    default_n_cases = 150

    @abstractmethod
    def generate_one(self, seed):
        """Return the generated puzzle and its solution."""

    def generate(self, rng, n_cases):
        for _ in range(n_cases):
            yield int(rng.integers(2**31))

    def evaluate(self, seed):
        puzzle, solution = self.generate_one(seed)
        record = {"seed": seed, "solutions": count_solutions(puzzle, cutoff=2)}
        solutions = {}
        errors = []
        for strategy, solver in (
            ("any_order", lambda p: solve_any_order(p)),
            ("parallel_wave", lambda p: solve_any_order(p, parallel_wave=True)),
            ("left_to_right", solve_left_to_right),
        ):
            solved, solve = solver(puzzle)
            solutions[strategy] = solved.values
            errors.extend(puzzle.verify_solution(solved))
            record[f"{strategy}_afp"], record[f"{strategy}_tau"] = _order_metrics(solve)
        record["errors"] = errors
        record["ok"] = (
            record["solutions"] == 1
            and not errors
            and all(values == solution.values for values in solutions.values())
            and record["left_to_right_afp"] in (None, 1.0)
            and record["left_to_right_tau"] in (None, 1.0)
        )
        return record

    def summarize(self, records):
        summary = super().summarize(records)
        for key in ("any_order_tau", "parallel_wave_afp"):
            values = [r[key] for r in records if r.get(key) is not None]
            summary[f"mean_{key}"] = fmean(values) if values else None
        return summary


class SudokuCheck(BasePuzzleCheck):
    """Sudoku puzzles, which are also solved easiest-first with some out-of-order steps."""

    name = "sudoku_puzzles"

    def __init__(self, givens_target=30, **kwargs):
        super().__init__(**kwargs)
        self.givens_target = givens_target

    def generate_one(self, seed):
        generation = generate_sudoku(seed, self.givens_target)
        return generation.puzzle, generation.solution

    def batch_violations(self, records, **kwargs):
        summary = self.summarize(records)
        res = []
        if summary["mean_any_order_tau"] is not None and not summary["mean_any_order_tau"] < 1:
            res.append("The mean Kendall tau of the easiest-first solve orders is not below 1")
        if summary["mean_parallel_wave_afp"] is not None and not (
            summary["mean_parallel_wave_afp"] > 1
        ):
            res.append("The mean AFP of the parallel-wave solve orders is not above 1")
        return res


class CrossMathCheck(BasePuzzleCheck):
    """Cross-math puzzles."""

    name = "crossmath_puzzles"

    def __init__(self, max_value=99, **kwargs):
        super().__init__(**kwargs)
        self.max_value = max_value

    def generate_one(self, seed):
        generation = generate_crossmath(seed, self.max_value)
        return generation.puzzle, generation.solution


def register(force=False):
    """Register the puzzle checks."""
    register_check(SudokuCheck(), force=force)
    register_check(CrossMathCheck(), force=force)
