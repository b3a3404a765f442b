"""Gridded localization space, gateway layout and the 9-action move model.

Axis convention: row index grows northward, column index grows eastward.
``Action.N`` is +1 row, ``Action.E`` is +1 column.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Position(NamedTuple):
    x: float
    y: float


class Action(enum.IntEnum):
    STAY = 0
    N = 1
    S = 2
    W = 3
    E = 4
    NW = 5
    NE = 6
    SW = 7
    SE = 8


N_ACTIONS = len(Action)

# (drow, dcol) indexed by Action value
ACTION_OFFSETS = np.array(
    [(0, 0), (1, 0), (-1, 0), (0, -1), (0, 1), (1, -1), (1, 1), (-1, -1), (-1, 1)],
    dtype=np.int64,
)


class ActionLeavesGrid(ValueError):
    pass


@dataclass(frozen=True)
class GridMap:
    rows: int
    cols: int
    cell_size: float
    origin: Position = Position(0.0, 0.0)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid needs rows, cols >= 1, got {self.rows}x{self.cols}")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "origin", Position(float(self.origin[0]), float(self.origin[1])))

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell(self, row: int, col: int) -> CellIndex:
        return CellIndex(row, col, self)

    def cells(self) -> list[CellIndex]:
        """All cells in row-major order."""
        return [CellIndex(r, c, self) for r in range(self.rows) for c in range(self.cols)]

    def flat(self, cell: tuple[int, int]) -> int:
        return cell[0] * self.cols + cell[1]

    def unflat(self, k: int) -> CellIndex:
        return CellIndex(k // self.cols, k % self.cols, self)

    def centers(self) -> np.ndarray:
        """(n_cells, 2) array of cell centers, row-major."""
        r, c = np.divmod(np.arange(self.n_cells), self.cols)
        return np.column_stack(
            [self.origin.x + (c + 0.5) * self.cell_size, self.origin.y + (r + 0.5) * self.cell_size]
        )


class CellIndex(tuple):
    """A (row, col) pair that is guaranteed to lie inside its grid."""

    __slots__ = ()

    def __new__(cls, row: int, col: int, grid: GridMap | None = None):
        row, col = int(row), int(col)
        if grid is not None and not (0 <= row < grid.rows and 0 <= col < grid.cols):
            raise IndexError(f"cell ({row}, {col}) outside {grid.rows}x{grid.cols} grid")
        if grid is None and (row < 0 or col < 0):
            raise IndexError(f"negative cell index ({row}, {col})")
        return super().__new__(cls, (row, col))

    @property
    def row(self) -> int:
        return self[0]

    @property
    def col(self) -> int:
        return self[1]

    def __repr__(self):
        return f"CellIndex({self[0]}, {self[1]})"


@dataclass(frozen=True)
class Gateway:
    id: int
    position: Position


def cell_center(grid: GridMap, cell: tuple[int, int]) -> Position:
    return Position(
        grid.origin.x + (cell[1] + 0.5) * grid.cell_size,
        grid.origin.y + (cell[0] + 0.5) * grid.cell_size,
    )


def nearest_cell(grid: GridMap, pos: tuple[float, float]) -> CellIndex:
    """Cell whose center is closest to ``pos``; outside positions clamp to the edge."""
    col = math.floor((pos[0] - grid.origin.x) / grid.cell_size)
    row = math.floor((pos[1] - grid.origin.y) / grid.cell_size)
    return CellIndex(min(max(row, 0), grid.rows - 1), min(max(col, 0), grid.cols - 1), grid)


def available_mask(grid: GridMap, cell: tuple[int, int]) -> np.ndarray:
    """Boolean mask over the 9 actions; True where the move stays on the grid."""
    r = cell[0] + ACTION_OFFSETS[:, 0]
    c = cell[1] + ACTION_OFFSETS[:, 1]
    return (r >= 0) & (r < grid.rows) & (c >= 0) & (c < grid.cols)


def available_actions(grid: GridMap, cell: tuple[int, int]) -> frozenset[Action]:
    return frozenset(Action(a) for a in np.flatnonzero(available_mask(grid, cell)))


def apply_action(grid: GridMap, cell: tuple[int, int], action: Action | int) -> CellIndex:
    dr, dc = ACTION_OFFSETS[int(action)]
    r, c = cell[0] + int(dr), cell[1] + int(dc)
    if not (0 <= r < grid.rows and 0 <= c < grid.cols):
        raise ActionLeavesGrid(f"action leaves grid: {Action(action).name} from {tuple(cell)}")
    return CellIndex(r, c, grid)


def gateway_grid_layout(
    gw_rows: int, gw_cols: int, dx: float, dy: float, origin: tuple[float, float] = (0.0, 0.0)
) -> list[Gateway]:
    """Regular gateway lattice, row-major from ``origin``, ids starting at 1."""
    if gw_rows * gw_cols < 1:
        raise ValueError("gateway layout needs at least one gateway")
    gws = []
    for i in range(gw_rows):
        for j in range(gw_cols):
            gws.append(Gateway(len(gws) + 1, Position(origin[0] + j * dx, origin[1] + i * dy)))
    return gws


def gateway_positions(gws: list[Gateway]) -> np.ndarray:
    return np.array([g.position for g in gws], dtype=np.float64).reshape(-1, 2)


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
