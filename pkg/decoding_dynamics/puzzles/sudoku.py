"""9x9 Sudoku grids and their generator."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from dataclasses import dataclass

import numpy as np

from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.puzzles.base import BLANK
from decoding_dynamics.puzzles.base import Puzzle
from decoding_dynamics.puzzles.solvers import count_solutions
from decoding_dynamics.util import LOGGER

SIZE = 9
N_CELLS = SIZE * SIZE
MIN_GIVENS = 17
_ALL_DIGITS = sum(1 << d for d in range(1, SIZE + 1))


def _units():
    rows = [[r * SIZE + c for c in range(SIZE)] for r in range(SIZE)]
    cols = [[r * SIZE + c for r in range(SIZE)] for c in range(SIZE)]
    boxes = [
        [(3 * br + r) * SIZE + 3 * bc + c for r in range(3) for c in range(3)]
        for br in range(3)
        for bc in range(3)
    ]
    return [("row", u) for u in rows] + [("column", u) for u in cols] + [("box", u) for u in boxes]


UNITS = _units()


def box_of(cell):
    """The index of the 3x3 box of a cell."""
    r, c = divmod(cell, SIZE)
    return 3 * (r // 3) + c // 3


@dataclass(frozen=True)
class SudokuGrid(Puzzle):
    """A 9x9 grid stored row by row; 0 marks a blank."""

    cells: tuple

    kind = "sudoku"

    def __post_init__(self):
        cells = tuple(int(v) for v in self.cells)
        if len(cells) != N_CELLS:
            raise DomainError(
                f"A Sudoku grid has {N_CELLS} cells (got {len(cells)})", module="puzzles"
            )
        if any(not 0 <= v <= SIZE for v in cells):
            raise DomainError("Sudoku cells must be in 0..9", module="puzzles")
        object.__setattr__(self, "cells", cells)

    @property
    def values(self):
        return self.cells

    @classmethod
    def empty(cls):
        return cls((BLANK,) * N_CELLS)

    @property
    def givens(self):
        """The number of filled cells."""
        return sum(1 for v in self.cells if v != BLANK)

    def candidate_map(self, values, cells=None):
        rows = [0] * SIZE
        cols = [0] * SIZE
        boxes = [0] * SIZE
        for cell, value in enumerate(values):
            if value != BLANK:
                bit = 1 << value
                r, c = divmod(cell, SIZE)
                rows[r] |= bit
                cols[c] |= bit
                boxes[box_of(cell)] |= bit
        if cells is None:
            cells = [i for i, v in enumerate(values) if v == BLANK]
        res = {}
        for cell in cells:
            r, c = divmod(cell, SIZE)
            free = _ALL_DIGITS & ~(rows[r] | cols[c] | boxes[box_of(cell)])
            res[cell] = tuple(d for d in range(1, SIZE + 1) if free >> d & 1)
        return res

    def violations(self, values=None):
        values = self.cells if values is None else values
        errors = []
        for position, (name, unit) in enumerate(UNITS):
            digits = [values[i] for i in unit if values[i] != BLANK]
            duplicated = sorted({d for d in digits if digits.count(d) > 1})
            if duplicated:
                index = position % SIZE + 1
                errors.append(f"{name} {index} repeats the digits {duplicated}")
        return errors

    def with_values(self, values):
        return SudokuGrid(tuple(values))

    def format(self):
        return "".join(
            "".join(str(v) for v in self.cells[r * SIZE : (r + 1) * SIZE]) + "\n"
            for r in range(SIZE)
        )

    @classmethod
    def parse(cls, text):
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if len(lines) != SIZE or any(len(line) != SIZE or not line.isdigit() for line in lines):
            raise DomainError("A Sudoku file must contain 9 lines of 9 digits", module="puzzles")
        return cls(tuple(int(ch) for line in lines for ch in line))


@dataclass(frozen=True)
class SudokuGeneration:
    """A generated puzzle with its unique solution."""

    puzzle: SudokuGrid
    solution: SudokuGrid
    seed: int
    givens_target: int

    @property
    def overshoot(self):
        """How many givens are left above the target."""
        return self.puzzle.givens - self.givens_target


def _random_fill(rng, grid, values, cell=0):
    if cell == N_CELLS:
        return True
    candidates = list(grid.candidate_map(values, [cell])[cell])
    for digit in rng.permutation(candidates):
        values[cell] = int(digit)
        if _random_fill(rng, grid, values, cell + 1):
            return True
    values[cell] = BLANK
    return False


def generate_sudoku(seed, givens_target=30):
    """Generate a Sudoku puzzle with a unique solution.

    A random full grid is drawn, then cells are blanked in random order as long as the puzzle
    keeps a unique solution and has more than ``givens_target`` givens.
    """
    if not MIN_GIVENS <= givens_target <= N_CELLS - 1:
        raise DomainError(
            f"givens_target must be in [{MIN_GIVENS}, {N_CELLS - 1}] (got {givens_target})",
            module="puzzles",
        )
    rng = np.random.default_rng(seed)
    grid = SudokuGrid.empty()
    values = list(grid.cells)
    _random_fill(rng, grid, values)
    solution = SudokuGrid(tuple(values))

    givens = N_CELLS
    for cell in rng.permutation(N_CELLS):
        if givens <= givens_target:
            break
        saved = values[cell]
        values[cell] = BLANK
        if count_solutions(SudokuGrid(tuple(values)), cutoff=2) == 1:
            givens -= 1
        else:
            values[cell] = saved

    result = SudokuGeneration(
        puzzle=SudokuGrid(tuple(values)),
        solution=solution,
        seed=seed,
        givens_target=givens_target,
    )
    if result.overshoot:
        LOGGER.warning(
            "The Sudoku of seed %s has %s givens instead of %s",
            seed,
            result.puzzle.givens,
            givens_target,
        )
    return result
