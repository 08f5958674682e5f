"""Base class of the constraint puzzles."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from abc import ABC
from abc import abstractmethod
from pathlib import Path

BLANK = 0


class Puzzle(ABC):
    """Base class of the puzzles.

    A puzzle is a flat tuple of cells, ``BLANK`` standing for an empty cell, plus whatever fixed
    structure the constraints need. The solvers only use the methods defined here, so a new kind
    of puzzle only has to implement :meth:`candidate_map`, :meth:`violations`,
    :meth:`with_values`, :meth:`format` and :meth:`parse`.
    """

    kind = None

    @property
    @abstractmethod
    def values(self):
        """The flat tuple of cells."""

    @property
    def blanks(self):
        """The indices of the blank cells in row-major order."""
        return tuple(i for i, v in enumerate(self.values) if v == BLANK)

    @property
    def role(self):
        """``solution`` if no cell is blank, ``puzzle`` otherwise."""
        return "puzzle" if self.blanks else "solution"

    @abstractmethod
    def candidate_map(self, values, cells=None):
        """Compute the candidate values of blank cells given a filling of the grid.

        Args:
            values (list(int)): The current cells, ``BLANK`` for the unfilled ones.
            cells (list(int)): (Optional) Restrict the computation to these blank cells.

        Returns:
            dict: Mapping from each blank cell of ``values`` to the tuple of its candidates in
            increasing order.
        """

    @abstractmethod
    def violations(self, values=None):
        """Return the constraints violated by the filled cells of ``values`` (or the puzzle)."""

    @abstractmethod
    def with_values(self, values):
        """Return a puzzle of the same kind and structure with other cells."""

    @abstractmethod
    def format(self):
        """Format the puzzle with its text format."""

    @classmethod
    @abstractmethod
    def parse(cls, text):
        """Parse the text format of the puzzle."""

    def is_consistent(self, values=None):
        """True if no constraint is violated by the filled cells."""
        return not self.violations(values)

    def verify_solution(self, solution):
        """Check a solution of this puzzle.

        Returns:
            list(str): The violated constraints, empty if the solution is valid.
        """
        values = solution.values if isinstance(solution, Puzzle) else tuple(solution)
        if len(values) != len(self.values):
            return [f"the solution has {len(values)} cells instead of {len(self.values)}"]
        errors = []
        for i, (given, value) in enumerate(zip(self.values, values)):
            if given != BLANK and given != value:
                errors.append(f"cell {i} changes the given {given} into {value}")
        blanks = [i for i, v in enumerate(values) if v == BLANK]
        if blanks:
            errors.append(f"cells {blanks} are blank")
        errors.extend(self.violations(values))
        return errors

    def save(self, path):
        """Write the puzzle into a file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.format(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path):
        """Read a puzzle from a file."""
        return cls.parse(Path(path).read_text(encoding="utf-8"))
