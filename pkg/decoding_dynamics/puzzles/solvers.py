"""Solvers shared by all the puzzles and the conversion of their solve order into traces."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

from dataclasses import dataclass

from decoding_dynamics.exceptions import DomainError
from decoding_dynamics.exceptions import NoSolutionError
from decoding_dynamics.puzzles.base import BLANK
from decoding_dynamics.trace import DecodingTrace
from decoding_dynamics.trace import StepScope
from decoding_dynamics.trace import TraceToken
from decoding_dynamics.util import LOGGER

ANY_ORDER = "any_order"
PARALLEL_WAVE = "parallel_wave"
LEFT_TO_RIGHT = "left_to_right"


@dataclass(frozen=True)
class SolveTrace:
    """The committed finalization order of the blanks of a puzzle.

    Args:
        cells (tuple(int)): The blank cells of the puzzle in row-major order.
        entries (tuple(tuple(int, int))): ``(blank index, finalize_step)`` pairs, the blank index
            being the rank of the cell in ``cells``.
        strategy (str): The solving strategy.
        branch_points (tuple(tuple(int, int, int))): ``(step, cell, candidate count)`` of the
            committed assignments that were guesses.
    """

    cells: tuple
    entries: tuple
    strategy: str
    branch_points: tuple = ()

    def __post_init__(self):
        entries = tuple(sorted((int(i), int(s)) for i, s in self.entries))
        object.__setattr__(self, "entries", entries)
        if sorted(i for i, _ in entries) != list(range(len(self.cells))):
            raise DomainError("Every blank must be finalized exactly once", module="puzzles")
        if entries and min(s for _, s in entries) != 1:
            raise DomainError("The finalization steps must start at 1", module="puzzles")

    @property
    def steps(self):
        """The finalization steps indexed by blank rank."""
        return [s for _, s in self.entries]


def _first_blank(candidates):
    """The blank with the fewest candidates, lowest index on ties."""
    return min(candidates, key=lambda cell: (len(candidates[cell]), cell))


def count_solutions(puzzle, cutoff=2):
    """Count the solutions of a puzzle by exhaustive backtracking, stopping at ``cutoff``."""
    if cutoff < 1:
        raise DomainError(f"The cutoff must be >= 1 (got {cutoff})", module="puzzles")
    if not puzzle.is_consistent():
        return 0

    def count(values):
        candidates = puzzle.candidate_map(values)
        if not candidates:
            return 0 if puzzle.violations(values) else 1
        cell = _first_blank(candidates)
        total = 0
        for value in candidates[cell]:
            values[cell] = value
            total += count(values)
            if total >= cutoff:
                break
        values[cell] = BLANK
        return total

    return min(count(list(puzzle.values)), cutoff)


def _committed_trace(puzzle, waves, branch_points, strategy):
    cells = puzzle.blanks
    rank = {cell: i for i, cell in enumerate(cells)}
    entries = [(rank[cell], step) for step, wave in enumerate(waves, start=1) for cell in wave]
    return SolveTrace(
        cells=cells, entries=tuple(entries), strategy=strategy, branch_points=tuple(branch_points)
    )


def solve_any_order(puzzle, parallel_wave=False):
    """Solve a puzzle most-constrained blank first.

    Without ``parallel_wave`` each step finalizes the blank with the fewest candidates; with it,
    all the blanks with a single candidate are finalized in one shared step. When no blank is
    determined the most constrained one is guessed with backtracking; the steps of retracted
    assignments are discarded.

    Returns:
        tuple(Puzzle, SolveTrace): The solution and the committed finalization order.
    """

    def search(values, waves, branch_points):
        candidates = puzzle.candidate_map(values)
        if not candidates:
            return None if puzzle.violations(values) else (values, waves, branch_points)
        if any(not c for c in candidates.values()):
            return None
        if parallel_wave:
            singles = sorted(cell for cell, c in candidates.items() if len(c) == 1)
            if singles:
                following = list(values)
                for cell in singles:
                    following[cell] = candidates[cell][0]
                if puzzle.violations(following):
                    return None
                return search(following, waves + [tuple(singles)], branch_points)
        cell = _first_blank(candidates)
        options = candidates[cell]
        for value in options:
            following = list(values)
            following[cell] = value
            branches = branch_points
            if len(options) > 1:
                branches = branch_points + [(len(waves) + 1, cell, len(options))]
            res = search(following, waves + [(cell,)], branches)
            if res is not None:
                return res
        return None

    if not puzzle.is_consistent():
        raise NoSolutionError(f"The {puzzle.kind} puzzle violates its constraints")
    res = search(list(puzzle.values), [], [])
    if res is None:
        raise NoSolutionError(f"The {puzzle.kind} puzzle has no solution")
    values, waves, branch_points = res
    strategy = PARALLEL_WAVE if parallel_wave else ANY_ORDER
    LOGGER.debug("Solved a %s puzzle in %s steps (%s)", puzzle.kind, len(waves), strategy)
    return puzzle.with_values(values), _committed_trace(puzzle, waves, branch_points, strategy)


def solve_left_to_right(puzzle):
    """Solve a puzzle by backtracking over the blanks in row-major order."""
    cells = puzzle.blanks

    def search(values, k):
        if k == len(cells):
            return not puzzle.violations(values)
        cell = cells[k]
        for value in puzzle.candidate_map(values, [cell])[cell]:
            values[cell] = value
            if search(values, k + 1):
                return True
        values[cell] = BLANK
        return False

    values = list(puzzle.values)
    if not puzzle.is_consistent() or not search(values, 0):
        raise NoSolutionError(f"The {puzzle.kind} puzzle has no solution")
    waves = [(cell,) for cell in cells]
    return puzzle.with_values(values), _committed_trace(puzzle, waves, [], LEFT_TO_RIGHT)


def to_decoding_trace(solve, sample_id, domain_tag=None, metadata=None):
    """Convert a solve order into a single-block :class:`DecodingTrace`."""
    tokens = tuple(
        TraceToken(position=i, finalize_step=step, block_index=0) for i, step in solve.entries
    )
    return DecodingTrace(
        sample_id=sample_id,
        tokens=tokens,
        step_scope=StepScope.GLOBAL,
        domain_tag=domain_tag,
        metadata={
            "strategy": solve.strategy,
            "branch_points": len(solve.branch_points),
            **(metadata or {}),
        },
    )
