"""Constraint puzzles and their solvers."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from decoding_dynamics.puzzles.base import BLANK  # noqa: F401
from decoding_dynamics.puzzles.base import Puzzle  # noqa: F401
from decoding_dynamics.puzzles.crossmath import CrossMathGrid  # noqa: F401
from decoding_dynamics.puzzles.crossmath import generate_crossmath  # noqa: F401
from decoding_dynamics.puzzles.solvers import SolveTrace  # noqa: F401
from decoding_dynamics.puzzles.solvers import count_solutions  # noqa: F401
from decoding_dynamics.puzzles.solvers import solve_any_order  # noqa: F401
from decoding_dynamics.puzzles.solvers import solve_left_to_right  # noqa: F401
from decoding_dynamics.puzzles.solvers import to_decoding_trace  # noqa: F401
from decoding_dynamics.puzzles.sudoku import SudokuGrid  # noqa: F401
from decoding_dynamics.puzzles.sudoku import generate_sudoku  # noqa: F401

PUZZLE_KINDS = {
    SudokuGrid.kind: SudokuGrid,
    CrossMathGrid.kind: CrossMathGrid,
}
