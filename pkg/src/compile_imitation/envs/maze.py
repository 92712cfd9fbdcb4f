"""
Recursive-backtracking maze carving for the grid world.

Maze cells sit on odd (row, col) coordinates of the interior; every other interior
cell starts as a wall and walls between consecutive cells of the depth-first walk are
carved away. The resulting interior walls are then thinned with a keep-rate.
"""

from typing import List, Set, Tuple

import numpy as np

from ..constants import DIRECTIONS

Cell = Tuple[int, int]


def border_cells(size: int) -> Set[Cell]:
    """Return the ring of cells enclosing a ``size`` x ``size`` grid."""
    ring = set()
    for i in range(size):
        ring.update({(0, i), (size - 1, i), (i, 0), (i, size - 1)})
    return ring


def carve_maze(size: int, rng: np.random.Generator) -> Set[Cell]:
    """Return the interior wall cells of a perfect maze on a ``size`` x ``size`` grid.

    Args:
        size (int): Cells per side, border included.
        rng (np.random.Generator): Source of randomness.

    Returns:
        set: Interior (non-border) cells that remain walls after carving.
    """
    interior = range(1, size - 1)
    maze_cells = [(r, c) for r in interior for c in interior if r % 2 == 1 and c % 2 == 1]
    walls = {(r, c) for r in interior for c in interior} - set(maze_cells)
    if not maze_cells:
        return walls

    visited = set()
    start = maze_cells[int(rng.integers(len(maze_cells)))]
    stack: List[Cell] = [start]
    visited.add(start)
    while stack:
        r, c = stack[-1]
        # unvisited neighbours two steps away
        options = []
        for dr, dc in DIRECTIONS:
            nr, nc = r + 2 * dr, c + 2 * dc
            if 1 <= nr < size - 1 and 1 <= nc < size - 1 and (nr, nc) not in visited:
                options.append((nr, nc, dr, dc))
        if options:
            nr, nc, dr, dc = options[int(rng.integers(len(options)))]
            walls.discard((r + dr, c + dc))
            visited.add((nr, nc))
            stack.append((nr, nc))
        else:
            stack.pop()
    return walls


def subsample_walls(walls: Set[Cell], keep_rate: float, rng: np.random.Generator) -> Set[Cell]:
    """Keep each wall independently with probability ``keep_rate`` (sorted order for determinism)."""
    ordered = sorted(walls)
    keep = rng.random(len(ordered)) < keep_rate
    return {cell for cell, k in zip(ordered, keep) if k}


def generate_walls(size: int, keep_rate: float, rng: np.random.Generator) -> Set[Cell]:
    """Border ring plus a thinned recursive-backtracking maze."""
    return border_cells(size) | subsample_walls(carve_maze(size, rng), keep_rate, rng)
