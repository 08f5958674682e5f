"""Cross-math grids: three horizontal and three vertical ``A op B = C`` equations.

The 5x5 layout (1-based number cells at odd rows and odd columns)::

    A  op B  =  C
    op #  op #  op
    D  op E  =  F
    =  #  =  #  =
    G  op H  =  I

Rows read ``A op B = C``, ``D op E = F`` and ``G op H = I``; columns read ``A op D = G``,
``B op E = H`` and ``C op F = I``. Operators are evaluated with integer arithmetic and every
number is in ``[1, N]``. In the text format blanks are written ``_``.
"""

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
from decoding_dynamics.exceptions import GenerationError
from decoding_dynamics.puzzles.base import BLANK
from decoding_dynamics.puzzles.base import Puzzle
from decoding_dynamics.puzzles.solvers import count_solutions
from decoding_dynamics.util import LOGGER

OPERATORS = ("+", "-", "*")
_ALIASES = {"+": "+", "-": "-", "−": "-", "*": "*", "×": "*"}
MIN_MAX_VALUE = 9
DEFAULT_MAX_ATTEMPTS = 1000

# Number-cell triples (A, B, C) of the equations, rows first
EQUATIONS = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8))

# Cells that are operands of both their row and their column equation
OPERAND_CELLS = (0, 1, 3, 4)


def apply(op, a, b):
    """Evaluate ``a op b``."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    return a * b


def _solve_left(op, b, c):
    """The ``a`` such that ``a op b = c``, or None if it is not an integer."""
    if op == "+":
        return c - b
    if op == "-":
        return c + b
    return c // b if c % b == 0 else None


def _solve_right(op, a, c):
    """The ``b`` such that ``a op b = c``, or None if it is not an integer."""
    if op == "+":
        return c - a
    if op == "-":
        return a - c
    return c // a if c % a == 0 else None


@dataclass(frozen=True)
class CrossMathGrid(Puzzle):
    """The 9 numbers of a cross-math grid (0 for a blank) with its 6 operators.

    Args:
        numbers (tuple(int)): The numbers in row-major order.
        operators (tuple(str)): The operators of the row equations then of the column equations.
        max_value (int): The largest allowed number ``N``.
    """

    numbers: tuple
    operators: tuple
    max_value: int = 99

    kind = "crossmath"

    def __post_init__(self):
        numbers = tuple(int(v) for v in self.numbers)
        if len(numbers) != 9:
            raise DomainError(
                f"A cross-math grid has 9 numbers (got {len(numbers)})", module="puzzles"
            )
        try:
            operators = tuple(_ALIASES[op] for op in self.operators)
        except KeyError as exc:
            raise DomainError(f"Unknown operator {exc}", module="puzzles") from exc
        if len(operators) != len(EQUATIONS):
            raise DomainError("A cross-math grid has 6 operators", module="puzzles")
        if self.max_value < 1:
            raise DomainError(f"max_value must be >= 1 (got {self.max_value})", module="puzzles")
        if any(v != BLANK and not 1 <= v <= self.max_value for v in numbers):
            raise DomainError(f"The numbers must be in [1, {self.max_value}]", module="puzzles")
        object.__setattr__(self, "numbers", numbers)
        object.__setattr__(self, "operators", operators)
        object.__setattr__(self, "max_value", int(self.max_value))

    @property
    def values(self):
        return self.numbers

    def _equation_candidates(self, values, cell, equation, op):
        """The values of ``cell`` for which the equation can still be completed."""
        known = {i: values[i] for i in equation if i != cell and values[i] != BLANK}
        n = self.max_value
        a, b, c = equation
        res = set()
        for v in range(1, n + 1):
            trial = {**known, cell: v}
            missing = [i for i in equation if i not in trial]
            if len(missing) > 1:
                return None
            if not missing:
                ok = apply(op, trial[a], trial[b]) == trial[c]
            elif missing[0] == c:
                ok = 1 <= apply(op, trial[a], trial[b]) <= n
            elif missing[0] == a:
                left = _solve_left(op, trial[b], trial[c])
                ok = left is not None and 1 <= left <= n
            else:
                right = _solve_right(op, trial[a], trial[c])
                ok = right is not None and 1 <= right <= n
            if ok:
                res.add(v)
        return res

    def candidate_map(self, values, cells=None):
        if cells is None:
            cells = [i for i, v in enumerate(values) if v == BLANK]
        res = {}
        for cell in cells:
            allowed = set(range(1, self.max_value + 1))
            for equation, op in zip(EQUATIONS, self.operators):
                if cell in equation:
                    constraint = self._equation_candidates(values, cell, equation, op)
                    if constraint is not None:
                        allowed &= constraint
            res[cell] = tuple(sorted(allowed))
        return res

    def violations(self, values=None):
        values = self.numbers if values is None else values
        errors = []
        for index, ((a, b, c), op) in enumerate(zip(EQUATIONS, self.operators)):
            if BLANK in (values[a], values[b], values[c]):
                continue
            if apply(op, values[a], values[b]) != values[c]:
                kind = "row" if index < 3 else "column"
                errors.append(
                    f"{kind} {index % 3 + 1}: {values[a]} {op} {values[b]} != {values[c]}"
                )
        return errors

    def with_values(self, values):
        return CrossMathGrid(tuple(values), self.operators, self.max_value)

    def layout(self):
        """The 5x5 cells as strings."""
        cells = [["#"] * 5 for _ in range(5)]
        for index, value in enumerate(self.numbers):
            r, c = divmod(index, 3)
            cells[2 * r][2 * c] = "_" if value == BLANK else str(value)
        for r in range(3):
            cells[2 * r][1] = self.operators[r]
            cells[2 * r][3] = "="
        for c in range(3):
            cells[1][2 * c] = self.operators[3 + c]
            cells[3][2 * c] = "="
        return cells

    def format(self):
        return "".join(" ".join(row) + "\n" for row in self.layout())

    @classmethod
    def parse(cls, text, max_value=99):
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if len(rows) != 5 or any(len(row) != 5 for row in rows):
            raise DomainError("A cross-math file must contain 5 lines of 5 cells", module="puzzles")
        numbers = []
        for r in range(3):
            for c in range(3):
                cell = rows[2 * r][2 * c]
                if cell == "_":
                    numbers.append(BLANK)
                elif cell.isdigit():
                    numbers.append(int(cell))
                else:
                    raise DomainError(f"Invalid number cell '{cell}'", module="puzzles")
        operators = [rows[2 * r][1] for r in range(3)] + [rows[1][2 * c] for c in range(3)]
        for r in range(3):
            if rows[2 * r][3] != "=" or rows[3][2 * r] != "=":
                raise DomainError("Misplaced '=' in the cross-math grid", module="puzzles")
        return cls(tuple(numbers), tuple(operators), max_value=max_value)


@dataclass(frozen=True)
class CrossMathGeneration:
    """A generated cross-math puzzle with its unique solution."""

    puzzle: CrossMathGrid
    solution: CrossMathGrid
    seed: int
    attempts: int


def _draw_solution(rng, max_value):
    """Draw a consistent full grid, or None if no grid fits the drawn operands and operators.

    ``A``, ``B`` and the operators are drawn, then ``D`` and ``E`` are drawn among the pairs for
    which the two equations ending in ``I`` agree and every number is in range.
    """
    a, b = (int(v) for v in rng.integers(1, max_value + 1, size=2))
    operators = tuple(OPERATORS[k] for k in rng.integers(0, len(OPERATORS), size=6))
    c = apply(operators[0], a, b)
    if not 1 <= c <= max_value:
        return None
    d, e = np.meshgrid(np.arange(1, max_value + 1), np.arange(1, max_value + 1), indexing="ij")
    f = apply(operators[1], d, e)
    g = apply(operators[3], a, d)
    h = apply(operators[4], b, e)
    i = apply(operators[2], g, h)
    fits = i == apply(operators[5], c, f)
    for values in (f, g, h, i):
        fits &= (values >= 1) & (values <= max_value)
    pairs = np.argwhere(fits)
    if len(pairs) == 0:
        return None
    pair = tuple(pairs[rng.integers(len(pairs))])
    numbers = (a, b, c) + tuple(int(values[pair]) for values in (d, e, f, g, h, i))
    return CrossMathGrid(numbers, operators, max_value)


def generate_crossmath(seed, max_value=99, max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Generate a cross-math puzzle with a unique solution.

    Operands and operators are drawn until the six equations hold with numbers in
    ``[1, max_value]``, then the operand cells ``A``, ``B``, ``D`` and ``E`` are blanked in random
    order while the solution stays unique.
    """
    if max_value < MIN_MAX_VALUE:
        raise DomainError(
            f"max_value must be >= {MIN_MAX_VALUE} (got {max_value})", module="puzzles"
        )
    rng = np.random.default_rng(seed)
    solution = None
    attempts = 0
    while solution is None:
        if attempts >= max_attempts:
            raise GenerationError(
                f"Could not draw a consistent cross-math grid in {attempts} attempts",
                attempts=attempts,
            )
        attempts += 1
        solution = _draw_solution(rng, max_value)

    values = list(solution.numbers)
    for cell in rng.permutation(OPERAND_CELLS):
        saved = values[cell]
        values[cell] = BLANK
        if count_solutions(solution.with_values(values), cutoff=2) != 1:
            values[cell] = saved
    LOGGER.debug("Cross-math grid of seed %s drawn in %s attempts", seed, attempts)
    return CrossMathGeneration(
        puzzle=solution.with_values(values), solution=solution, seed=seed, attempts=attempts
    )
