"""Height-map grids, vertex ordering, and the cubical filtration they induce.

A height map is an H x W array of scalars indexed (row, col). Its cubical
complex (V-construction) has one vertex per pixel, an edge per pair of
4-adjacent pixels, and a square per 2x2 pixel block. Every cell enters the
sublevel filtration at the value of its largest vertex, with ties broken by
a fixed linear index so that the induced cell order is a strict total order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Input grid is empty or not two-dimensional."""


@dataclass(frozen=True)
class HeightMap:
    """Immutable 2D scalar field; entry (i, j) is row i, column j."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"height map must be 2D, got ndim={arr.ndim}")
        if arr.size == 0:
            raise DimensionError(f"height map must have at least one row and column, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("height map contains non-finite entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def perturbed(self, pos: tuple[int, int], delta: float) -> "HeightMap":
        """Copy with a single entry shifted by delta."""
        vals = self.values.copy()
        vals[pos] += delta
        return HeightMap(vals)


def tie_break_index(i: int, j: int, height: int) -> int:
    """Column-fastest linear index used to break value ties between vertices."""
    return i + height * j


def _tie_indices(height: int, width: int) -> np.ndarray:
    """(H, W) array of tie-break indices."""
    ii, jj = np.indices((height, width))
    return ii + height * jj


def vertex_order(hm: HeightMap) -> np.ndarray:
    """All vertices sorted ascending by (value, tie-break index).

    Returns an (H*W, 2) int array of (row, col) coordinates. The order is a
    strict total order: equal values are resolved by the linear index, so the
    result is a permutation of the grid for any input.
    """
    h, w = hm.shape
    tie = _tie_indices(h, w).ravel()
    order = np.lexsort((tie, hm.values.ravel()))
    ii, jj = np.divmod(order, w)
    return np.column_stack((ii, jj))


def vertex_ranks(hm: HeightMap) -> np.ndarray:
    """(H, W) array giving each vertex its position in vertex_order."""
    h, w = hm.shape
    tie = _tie_indices(h, w).ravel()
    order = np.lexsort((tie, hm.values.ravel()))
    ranks = np.empty(h * w, dtype=np.int64)
    ranks[order] = np.arange(h * w)
    return ranks.reshape(h, w)


def min_value_gap(hm: HeightMap) -> float:
    """Smallest positive difference between distinct values (inf if none)."""
    vals = np.unique(hm.values)
    if vals.size < 2:
        return float("inf")
    return float(np.min(np.diff(vals)))


# Cells. An edge's anchor is its top/left endpoint; orientation 'h' runs to
# (i, j+1), 'v' runs to (i+1, j). A square's anchor is its top-left vertex.

_ORIENT_CODE = {None: 0, "h": 0, "v": 1}


@dataclass(frozen=True)
class Cell:
    dim: int
    anchor: tuple[int, int]
    orientation: str | None = None

    def __post_init__(self):
        if self.dim not in (0, 1, 2):
            raise ValueError(f"cell dimension must be 0, 1, or 2, got {self.dim}")
        if (self.dim == 1) != (self.orientation is not None):
            raise ValueError("exactly the 1-cells carry an orientation")
        if self.orientation not in (None, "h", "v"):
            raise ValueError(f"orientation must be 'h' or 'v', got {self.orientation!r}")


def cell_vertices(cell: Cell) -> tuple[tuple[int, int], ...]:
    """The vertex faces of a cell (the cell itself for dim 0)."""
    i, j = cell.anchor
    if cell.dim == 0:
        return ((i, j),)
    if cell.dim == 1:
        if cell.orientation == "h":
            return ((i, j), (i, j + 1))
        return ((i, j), (i + 1, j))
    return ((i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1))


def cell_faces(cell: Cell) -> tuple[Cell, ...]:
    """Codimension-1 faces: edge endpoints, or the four edges of a square."""
    i, j = cell.anchor
    if cell.dim == 0:
        return ()
    if cell.dim == 1:
        return tuple(Cell(0, v) for v in cell_vertices(cell))
    return (
        Cell(1, (i, j), "h"),
        Cell(1, (i + 1, j), "h"),
        Cell(1, (i, j), "v"),
        Cell(1, (i, j + 1), "v"),
    )


def enumerate_cells(height: int, width: int) -> list[Cell]:
    """Every cell of the H x W grid complex, in no particular order."""
    cells: list[Cell] = []
    for i in range(height):
        for j in range(width):
            cells.append(Cell(0, (i, j)))
    for i in range(height):
        for j in range(width - 1):
            cells.append(Cell(1, (i, j), "h"))
    for i in range(height - 1):
        for j in range(width):
            cells.append(Cell(1, (i, j), "v"))
    for i in range(height - 1):
        for j in range(width - 1):
            cells.append(Cell(2, (i, j)))
    return cells


@dataclass(frozen=True)
class FiltrationOrder:
    """All cells sorted by the global order; parallel arrays carry values.

    values[k] is the filtration value of cells[k]; max_vertices[k] is the
    (row, col) of its tie-break-maximal vertex. positions maps a cell to its
    index, which the boundary-matrix reduction uses as the row/column id.
    """

    cells: tuple[Cell, ...]
    values: np.ndarray
    max_vertices: np.ndarray
    positions: dict

    def __len__(self) -> int:
        return len(self.cells)


def cell_sort_key(cell: Cell, ranks: np.ndarray, height: int) -> tuple[int, int, int, int]:
    """Strict total order on cells: (max-vertex rank, dim, orientation, anchor).

    The first component makes faces precede cofaces; ascending dimension
    settles cells sharing a maximal vertex; the remaining components are an
    arbitrary but fixed rule that completes the order.
    """
    verts = cell_vertices(cell)
    max_rank = max(ranks[v] for v in verts)
    return (
        int(max_rank),
        cell.dim,
        _ORIENT_CODE[cell.orientation],
        tie_break_index(*cell.anchor, height),
    )


def build_filtration(hm: HeightMap) -> FiltrationOrder:
    """Sort every cell of the complex by the global order."""
    h, w = hm.shape
    ranks = vertex_ranks(hm)
    cells = enumerate_cells(h, w)
    cells.sort(key=lambda c: cell_sort_key(c, ranks, h))

    n = len(cells)
    values = np.empty(n, dtype=np.float64)
    max_verts = np.empty((n, 2), dtype=np.int64)
    for k, cell in enumerate(cells):
        verts = cell_vertices(cell)
        top = max(verts, key=lambda v: ranks[v])
        values[k] = hm.values[top]
        max_verts[k] = top
    values.setflags(write=False)
    max_verts.setflags(write=False)
    return FiltrationOrder(
        cells=tuple(cells),
        values=values,
        max_vertices=max_verts,
        positions={c: k for k, c in enumerate(cells)},
    )
