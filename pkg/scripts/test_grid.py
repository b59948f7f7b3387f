#!/usr/bin/env python3
"""
Grid engine: placement, removal, maximal vacant regions and EDI, plus a
randomized property suite against brute force on grids up to 6x6.

Usage: python scripts/test_grid.py
"""
import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from vnesim.errors import (  # noqa: E402
    ConfigError,
    OutOfBoundsError,
    OverlapError,
    RegionTooSmallError,
    UnknownNetworkError,
)
from vnesim.grid import (  # noqa: E402
    OccupancyGrid,
    Placement,
    SubstrateDims,
    VacantRegion,
    best_corner,
    corner_candidates,
    edi,
    find_vacant_regions,
    place,
    remove,
)

A, B, C = 1, 2, 3
DIMS_5 = SubstrateDims(5, 5)
PROPERTY_CASES = 1200


def grid_of(dims, *placements):
    return OccupancyGrid.from_placements(dims, placements)


# --- place / remove ---

def test_place_fills_rectangle():
    grid = place(OccupancyGrid.empty(DIMS_5), Placement(A, 0, 0, 2, 3))
    assert grid.occupied_count == 6
    assert grid.cells[0:2, 0:3].all()
    assert grid.owner(1, 2) == A
    assert grid.owner(2, 0) is None


def test_place_single_block_adds_one_cell():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 2, 3))
    assert place(grid, Placement(B, 4, 4, 1, 1)).occupied_count == grid.occupied_count + 1


def test_place_overlap_raises():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 2, 3))
    with pytest.raises(OverlapError):
        place(grid, Placement(C, 1, 1, 3, 3))


def test_place_out_of_bounds_raises():
    with pytest.raises(OutOfBoundsError):
        place(OccupancyGrid.empty(DIMS_5), Placement(A, 3, 0, 3, 1))


def test_place_does_not_mutate_input():
    empty = OccupancyGrid.empty(DIMS_5)
    place(empty, Placement(A, 0, 0, 2, 2))
    assert empty.occupied_count == 0


def test_remove_restores_empty_grid():
    empty = OccupancyGrid.empty(DIMS_5)
    assert remove(place(empty, Placement(A, 0, 0, 2, 3)), A) == empty


def test_remove_expired_network_keeps_other():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 2, 3), Placement(B, 2, 0, 2, 3))
    after = remove(grid, A)
    assert after.occupied_count == 6
    assert after.cells[2:4, 0:3].all()
    assert set(after.placements) == {B}


def test_remove_unknown_raises():
    with pytest.raises(UnknownNetworkError):
        remove(OccupancyGrid.empty(DIMS_5), 99)


def test_substrate_dims_must_be_positive():
    with pytest.raises(ConfigError):
        SubstrateDims(0, 5)


# --- vacant regions ---

def test_empty_grid_single_region():
    assert find_vacant_regions(OccupancyGrid.empty(DIMS_5), 3, 3) == [VacantRegion(0, 0, 5, 5)]


def test_regions_around_top_left_block():
    grid = grid_of(DIMS_5, Placement(B, 0, 0, 2, 3))
    regions = find_vacant_regions(grid, 3, 3)
    assert VacantRegion(2, 0, 3, 5) in regions
    assert all(r.width >= 3 and r.height >= 3 for r in regions)
    assert VacantRegion(0, 3, 5, 2) not in regions


def test_full_grid_has_no_region():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 5, 5))
    assert find_vacant_regions(grid, 1, 1) == []


def test_regions_sorted_by_area():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 2, 3))
    areas = [r.area for r in find_vacant_regions(grid, 1, 1)]
    assert areas == sorted(areas)


def test_oversized_request_has_no_region():
    assert find_vacant_regions(OccupancyGrid.empty(SubstrateDims(12, 12)), 13, 1) == []


# --- EDI and corners ---

def test_edi_empty_and_full():
    assert edi(OccupancyGrid.empty(DIMS_5)) == 0
    assert edi(grid_of(DIMS_5, Placement(A, 0, 0, 5, 5))) == 0


def test_edi_corner_block():
    # 2x3 block in the corner borders 3 free cells below and 2 to the right
    assert edi(grid_of(DIMS_5, Placement(A, 0, 0, 2, 3))) == 5


def test_edi_interior_single_block():
    assert edi(grid_of(DIMS_5, Placement(A, 2, 2, 1, 1))) == 4


def test_corner_candidates_order():
    region = VacantRegion(1, 1, 4, 4)
    assert corner_candidates(region, 2, 2) == [(1, 1), (1, 3), (3, 1), (3, 3)]


def test_best_corner_hugs_existing_block():
    grid = grid_of(DIMS_5, Placement(A, 0, 0, 2, 3))
    region = VacantRegion(2, 0, 3, 5)
    p = best_corner(grid, region, 2, 3, B)
    assert (p.origin_i, p.origin_j) == (2, 0)


def test_best_corner_first_minimum_wins():
    # Every corner of an empty square scores the same: top-left is kept
    p = best_corner(OccupancyGrid.empty(DIMS_5), VacantRegion(0, 0, 5, 5), 1, 1, A)
    assert (p.origin_i, p.origin_j) == (0, 0)


def test_best_corner_region_too_small():
    with pytest.raises(RegionTooSmallError):
        best_corner(OccupancyGrid.empty(DIMS_5), VacantRegion(0, 0, 2, 2), 3, 1, A)


# --- randomized properties ---

def random_grid(rng, max_rects=3):
    dims = SubstrateDims(int(rng.integers(1, 6, endpoint=True)), int(rng.integers(1, 6, endpoint=True)))
    grid = OccupancyGrid.empty(dims)
    for nid in range(1, int(rng.integers(0, max_rects, endpoint=True)) + 1):
        f = int(rng.integers(1, dims.F, endpoint=True))
        td = int(rng.integers(1, dims.T, endpoint=True))
        p = Placement(nid, int(rng.integers(0, dims.F - f, endpoint=True)),
                      int(rng.integers(0, dims.T - td, endpoint=True)), f, td)
        if not grid.cells[p.rows, p.cols].any():
            grid = place(grid, p)
    return grid


def brute_force_regions(cells, f, td):
    F, T = cells.shape
    found = set()
    for i in range(F):
        for j in range(T):
            for h in range(1, F - i + 1):
                for w in range(1, T - j + 1):
                    if cells[i:i + h, j:j + w].any():
                        continue
                    up = i == 0 or cells[i - 1, j:j + w].any()
                    down = i + h == F or cells[i + h, j:j + w].any()
                    left = j == 0 or cells[i:i + h, j - 1].any()
                    right = j + w == T or cells[i:i + h, j + w].any()
                    if up and down and left and right and h >= f and w >= td:
                        found.add((i, j, h, w))
    return found


def brute_force_edi(cells):
    F, T = cells.shape
    count = 0
    for i in range(F):
        for j in range(T):
            if i + 1 < F and cells[i, j] != cells[i + 1, j]:
                count += 1
            if j + 1 < T and cells[i, j] != cells[i, j + 1]:
                count += 1
    return count


def transposed(grid):
    dims = SubstrateDims(grid.dims.T, grid.dims.F)
    return OccupancyGrid.from_placements(
        dims, [Placement(p.network_id, p.origin_j, p.origin_i, p.td, p.f) for p in grid.placements.values()]
    )


def mirrored(grid):
    T = grid.dims.T
    return OccupancyGrid.from_placements(
        grid.dims,
        [p.moved(p.origin_i, T - p.origin_j - p.td) for p in grid.placements.values()],
    )


def test_vacant_regions_match_brute_force():
    rng = np.random.default_rng(20240501)
    for _ in range(PROPERTY_CASES):
        grid = random_grid(rng)
        f = int(rng.integers(1, grid.dims.F, endpoint=True))
        td = int(rng.integers(1, grid.dims.T, endpoint=True))
        found = {(r.origin_i, r.origin_j, r.height, r.width) for r in find_vacant_regions(grid, f, td)}
        assert found == brute_force_regions(grid.cells, f, td), grid


def test_vacant_regions_match_brute_force_full_size():
    rng = np.random.default_rng(12)
    dims = SubstrateDims(12, 12)
    for _ in range(40):
        grid = OccupancyGrid.empty(dims)
        for nid in range(1, 9):
            f, td = (int(v) for v in rng.integers(1, 5, size=2, endpoint=True))
            p = Placement(nid, int(rng.integers(0, 12 - f, endpoint=True)),
                          int(rng.integers(0, 12 - td, endpoint=True)), f, td)
            if not grid.cells[p.rows, p.cols].any():
                grid = place(grid, p)
        f, td = (int(v) for v in rng.integers(1, 3, size=2, endpoint=True))
        found = {(r.origin_i, r.origin_j, r.height, r.width) for r in find_vacant_regions(grid, f, td)}
        assert found == brute_force_regions(grid.cells, f, td), grid


def test_best_corner_matches_full_edi_recount():
    rng = np.random.default_rng(5)
    for _ in range(PROPERTY_CASES):
        grid = random_grid(rng)
        f = int(rng.integers(1, grid.dims.F, endpoint=True))
        td = int(rng.integers(1, grid.dims.T, endpoint=True))
        for region in find_vacant_regions(grid, f, td):
            scores = [edi(place(grid, Placement(99, i, j, f, td))) for i, j in corner_candidates(region, f, td)]
            i, j = corner_candidates(region, f, td)[scores.index(min(scores))]
            p = best_corner(grid, region, f, td, 99)
            assert (p.origin_i, p.origin_j) == (i, j), (grid, region)


def test_edi_matches_brute_force_and_symmetries():
    rng = np.random.default_rng(7)
    for _ in range(PROPERTY_CASES):
        grid = random_grid(rng)
        value = edi(grid)
        assert value == brute_force_edi(grid.cells)
        assert edi(transposed(grid)) == value
        assert edi(mirrored(grid)) == value


def test_place_remove_round_trip_and_no_overlap():
    rng = np.random.default_rng(11)
    for _ in range(PROPERTY_CASES):
        grid = random_grid(rng)
        dims = grid.dims
        f = int(rng.integers(1, dims.F, endpoint=True))
        td = int(rng.integers(1, dims.T, endpoint=True))
        p = Placement(99, int(rng.integers(0, dims.F - f, endpoint=True)),
                      int(rng.integers(0, dims.T - td, endpoint=True)), f, td)
        if grid.cells[p.rows, p.cols].any():
            with pytest.raises(OverlapError):
                place(grid, p)
            continue
        placed = place(grid, p)
        assert placed.occupied_count == grid.occupied_count + p.area
        assert remove(placed, 99) == grid


def test_edi_corner_strictly_below_interior():
    rng = np.random.default_rng(3)
    for _ in range(PROPERTY_CASES):
        F = int(rng.integers(3, 6, endpoint=True))
        T = int(rng.integers(3, 6, endpoint=True))
        dims = SubstrateDims(F, T)
        f = int(rng.integers(1, F - 2, endpoint=True))
        td = int(rng.integers(1, T - 2, endpoint=True))
        corner = grid_of(dims, Placement(A, 0, 0, f, td))
        interior = grid_of(dims, Placement(A, int(rng.integers(1, F - f - 1, endpoint=True)),
                                           int(rng.integers(1, T - td - 1, endpoint=True)), f, td))
        assert edi(corner) < edi(interior)


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-q']))
