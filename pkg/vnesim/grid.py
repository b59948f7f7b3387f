"""
Geometric core: occupancy grids, rectangle placement, maximal vacant regions
and the Embedding Density Index (EDI).

Rows are frequency blocks (i in 0..F-1), columns are time-domain blocks
(j in 0..T-1). Requests are never rotated: f always runs along the rows.
Grids are values; place() and remove() return new grids.
"""
from dataclasses import dataclass
from types import MappingProxyType
from typing import Hashable

import numpy as np

from vnesim.errors import (
    ConfigError,
    InvalidStateError,
    OutOfBoundsError,
    OverlapError,
    RegionTooSmallError,
    UnknownNetworkError,
)


@dataclass(frozen=True)
class SubstrateDims:
    F: int
    T: int

    def __post_init__(self):
        if self.F < 1 or self.T < 1:
            raise ConfigError(f"substrate dimensions must be positive, got {self.F}x{self.T}")

    @property
    def capacity(self):
        return self.F * self.T

    @property
    def shape(self):
        return (self.F, self.T)

    def __str__(self):
        return f"{self.F}x{self.T}"


@dataclass(frozen=True, order=True)
class Placement:
    """A rectangle of resource blocks assigned to one network."""
    network_id: Hashable
    origin_i: int
    origin_j: int
    f: int
    td: int

    def __post_init__(self):
        if self.f < 1 or self.td < 1:
            raise OutOfBoundsError(f"placement spans must be positive, got {self.f}x{self.td}")
        if self.origin_i < 0 or self.origin_j < 0:
            raise OutOfBoundsError(f"negative origin ({self.origin_i}, {self.origin_j})")

    @property
    def area(self):
        return self.f * self.td

    @property
    def rows(self):
        return slice(self.origin_i, self.origin_i + self.f)

    @property
    def cols(self):
        return slice(self.origin_j, self.origin_j + self.td)

    def fits(self, dims):
        return self.origin_i + self.f <= dims.F and self.origin_j + self.td <= dims.T

    def moved(self, origin_i, origin_j):
        return Placement(self.network_id, origin_i, origin_j, self.f, self.td)


@dataclass(frozen=True)
class VacantRegion:
    origin_i: int
    origin_j: int
    height: int
    width: int

    @property
    def area(self):
        return self.height * self.width


class OccupancyGrid:
    """
    F x T boolean grid of occupied resource blocks plus the placement that
    owns each occupied rectangle.
    """
    __slots__ = ('dims', '_cells', '_placements')

    def __init__(self, dims, cells, placements):
        # Trusted constructor; use empty() / from_placements() / place().
        cells.flags.writeable = False
        self.dims = dims
        self._cells = cells
        self._placements = placements

    @classmethod
    def empty(cls, dims):
        return cls(dims, np.zeros(dims.shape, dtype=bool), {})

    @classmethod
    def from_placements(cls, dims, placements):
        """Build a grid by placing each rectangle in turn (raises on overlap)."""
        grid = cls.empty(dims)
        for p in placements:
            grid = place(grid, p)
        return grid

    @property
    def cells(self):
        return self._cells

    @property
    def placements(self):
        return MappingProxyType(self._placements)

    @property
    def occupied_count(self):
        return int(np.count_nonzero(self._cells))

    @property
    def occupancy(self):
        return self.occupied_count / self.dims.capacity

    def owner(self, i, j):
        if not self._cells[i, j]:
            return None
        for p in self._placements.values():
            if p.origin_i <= i < p.origin_i + p.f and p.origin_j <= j < p.origin_j + p.td:
                return p.network_id
        raise InvalidStateError(f"cell ({i}, {j}) is occupied but has no owner")

    def owner_matrix(self):
        owners = np.full(self.dims.shape, None, dtype=object)
        for p in self._placements.values():
            owners[p.rows, p.cols] = p.network_id
        return owners

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.dims == other.dims
            and self._placements == other._placements
            and np.array_equal(self._cells, other._cells)
        )

    __hash__ = None

    def __repr__(self):
        return f"OccupancyGrid({self.dims}, networks={sorted(self._placements, key=str)})"


def place(grid, p):
    """Return a new grid with p's rectangle occupied and owned by p.network_id."""
    if not p.fits(grid.dims):
        raise OutOfBoundsError(
            f"network {p.network_id} at ({p.origin_i}, {p.origin_j}) size {p.f}x{p.td} "
            f"exceeds substrate {grid.dims}"
        )
    if p.network_id in grid._placements:
        raise InvalidStateError(f"network {p.network_id} is already placed")

    window = grid._cells[p.rows, p.cols]
    if window.any():
        i, j = np.argwhere(window)[0]
        raise OverlapError(
            f"network {p.network_id} overlaps occupied block ({p.origin_i + i}, {p.origin_j + j})"
        )

    cells = grid._cells.copy()
    cells[p.rows, p.cols] = True
    placements = dict(grid._placements)
    placements[p.network_id] = p
    return OccupancyGrid(grid.dims, cells, placements)


def remove(grid, network_id):
    """Return a new grid with every block of network_id released."""
    if network_id not in grid._placements:
        raise UnknownNetworkError(f"network {network_id} owns no cell")

    placements = dict(grid._placements)
    p = placements.pop(network_id)
    cells = grid._cells.copy()
    cells[p.rows, p.cols] = False
    return OccupancyGrid(grid.dims, cells, placements)


def _nearest_lower(heights, order):
    """For each column, the closest column in `order` direction with a lower bar (-1 / T if none)."""
    T = len(heights)
    bound = [-1 if order == 1 else T] * T
    stack = []
    columns = range(T) if order == 1 else range(T - 1, -1, -1)
    for j in columns:
        while stack and heights[stack[-1]] >= heights[j]:
            stack.pop()
        if stack:
            bound[j] = stack[-1]
        stack.append(j)
    return bound


def find_vacant_regions(grid, f, td):
    """
    All maximal vacant rectangles at least f high and td wide, smallest area
    first (ties: origin row, origin column, height).

    One pass over the rows: for each bottom row, every column's bar of free
    cells above it spans the columns up to the nearest lower bar on each
    side, which is maximal upwards, left and right. Rows below decide
    downward maximality.
    """
    if f < 1 or td < 1:
        raise ValueError(f"spans must be positive, got {f}x{td}")

    occ = grid._cells
    F, T = grid.dims.shape
    if f > F or td > T:
        return []

    found = set()
    heights = np.zeros(T, dtype=np.int64)
    for bottom in range(F):
        heights = np.where(occ[bottom], 0, heights + 1)
        if heights.max() < f:
            continue
        bars = heights.tolist()
        left = _nearest_lower(bars, 1)
        right = _nearest_lower(bars, -1)
        for j, height in enumerate(bars):
            if height < f:
                continue
            start, stop = left[j] + 1, right[j]
            if stop - start < td:
                continue
            if bottom < F - 1 and not occ[bottom + 1, start:stop].any():
                continue
            found.add(VacantRegion(bottom - height + 1, start, height, stop - start))

    return sorted(found, key=lambda r: (r.area, r.origin_i, r.origin_j, r.height))


def _edi(cells):
    vertical = np.count_nonzero(cells[1:, :] != cells[:-1, :])
    horizontal = np.count_nonzero(cells[:, 1:] != cells[:, :-1])
    return int(vertical + horizontal)


def edi(grid):
    """
    Embedding Density Index: number of 4-neighbour pairs of blocks where one
    block is free and the other occupied. The substrate edge is not a border.
    """
    return _edi(grid._cells)


def _edi_delta(cells, origin_i, origin_j, f, td):
    """
    EDI change from occupying a vacant f x td rectangle. Only pairs across
    its perimeter change: a free neighbour becomes a border, an occupied one
    stops being one.
    """
    F, T = cells.shape
    bottom, right = origin_i + f, origin_j + td
    strips = []
    if origin_i > 0:
        strips.append(cells[origin_i - 1, origin_j:right])
    if bottom < F:
        strips.append(cells[bottom, origin_j:right])
    if origin_j > 0:
        strips.append(cells[origin_i:bottom, origin_j - 1])
    if right < T:
        strips.append(cells[origin_i:bottom, right])
    neighbours = sum(len(s) for s in strips)
    occupied = sum(int(np.count_nonzero(s)) for s in strips)
    return neighbours - 2 * occupied


def corner_candidates(region, f, td):
    """Origins of an f x td rectangle at the region's TL, TR, BL, BR corners."""
    bottom = region.origin_i + region.height - f
    right = region.origin_j + region.width - td
    return [
        (region.origin_i, region.origin_j),
        (region.origin_i, right),
        (bottom, region.origin_j),
        (bottom, right),
    ]


def best_corner(grid, region, f, td, network_id):
    """
    Placement at the corner of the vacant region that leaves the grid with
    the lowest EDI. The grid's own EDI is common to all four corners, so
    corners are compared by the change alone.
    """
    if region.height < f or region.width < td:
        raise RegionTooSmallError(
            f"region {region.height}x{region.width} cannot hold {f}x{td}"
        )

    best = None
    best_score = None
    for origin_i, origin_j in corner_candidates(region, f, td):
        score = _edi_delta(grid._cells, origin_i, origin_j, f, td)
        if best_score is None or score < best_score:
            best, best_score = (origin_i, origin_j), score

    return Placement(network_id, best[0], best[1], f, td)
