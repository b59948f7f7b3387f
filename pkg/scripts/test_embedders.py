#!/usr/bin/env python3
"""
KM embedders, greedy combination search and the mode registry.

Usage: python scripts/test_embedders.py
"""
import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from vnesim import embedders  # noqa: E402
from vnesim.embedders import (  # noqa: E402
    EmbedRequest,
    EmbedderMode,
    embed_dynamic_greedy,
    embed_dynamic_km,
    embed_static_km,
    enumerate_combinations,
    get_embedder,
    group_by_priority,
    new_request_order,
)
from vnesim.errors import CombinationExplosion, ConfigError, InvalidStateError  # noqa: E402
from vnesim.grid import OccupancyGrid, Placement, SubstrateDims  # noqa: E402

A, B, C = 1, 2, 3
DIMS_5 = SubstrateDims(5, 5)


def new(nid, f, td, priority=1, arrival=0):
    return EmbedRequest(nid, priority, f, td, arrival=arrival)


def existing(nid, placement, priority=1):
    return EmbedRequest(nid, priority, placement.f, placement.td).as_existing(placement)


def assert_consistent(dims, result):
    # from_placements raises on overlap or out-of-bounds
    OccupancyGrid.from_placements(dims, result.placements)


# --- ordering ---

def test_new_request_order():
    reqs = [new(1, 1, 1, priority=2), new(2, 2, 2, priority=1), new(3, 3, 3, priority=1, arrival=1),
            new(4, 3, 3, priority=1, arrival=0)]
    assert [r.network_id for r in sorted(reqs, key=new_request_order)] == [4, 3, 2, 1]


def test_group_by_priority():
    levels = group_by_priority([new(1, 1, 1, 2), new(2, 1, 1, 1)], K=3)
    assert [[r.network_id for r in level] for level in levels] == [[2], [1], []]


# --- static / dynamic KM on the scripted 5x5 example ---

def test_first_slot_places_a_then_b():
    result = embed_static_km(DIMS_5, [], [new(A, 2, 3), new(B, 2, 3)])
    assert result.embedded_ids == (A, B)
    positions = result.placement_map()
    assert positions[A] == Placement(A, 0, 0, 2, 3)
    assert positions[B] == Placement(B, 2, 0, 2, 3)


def test_static_km_defers_c():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_static_km(DIMS_5, [b], [new(C, 3, 3)])
    assert result.embedded_ids == ()
    assert result.deferred_ids == (C,)
    assert result.placement_map()[B] == b.placement


def test_dynamic_km_moves_b_and_accepts_c():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_dynamic_km(DIMS_5, [b], [new(C, 3, 3)])
    assert result.embedded_ids == (C,)
    assert result.deferred_ids == ()
    assert result.placement_map()[B] == Placement(B, 0, 0, 2, 3)
    assert result.reembed_failures == 0
    assert_consistent(DIMS_5, result)


def test_dynamic_km_packs_four_quadrants():
    dims = SubstrateDims(12, 12)
    blocks = [existing(n, Placement(n, i, j, 6, 6)) for n, (i, j) in enumerate(((0, 0), (0, 6), (6, 0), (6, 6)), 1)]
    result = embed_dynamic_km(dims, blocks, [new(5, 1, 1)])
    assert result.deferred_ids == (5,)
    assert result.embedded_ids == ()
    assert set(result.placement_map()) == {1, 2, 3, 4}
    assert_consistent(dims, result)


def test_dynamic_km_rejects_oversized_existing():
    big = [existing(1, Placement(1, 0, 0, 5, 5)), existing(2, Placement(2, 0, 0, 1, 1))]
    with pytest.raises(InvalidStateError):
        embed_dynamic_km(DIMS_5, big, [])


def test_static_km_rejects_overlapping_existing():
    overlapping = [existing(1, Placement(1, 0, 0, 2, 2)), existing(2, Placement(2, 1, 1, 2, 2))]
    with pytest.raises(InvalidStateError):
        embed_static_km(DIMS_5, overlapping, [])


def test_reembed_failure_falls_back_to_static(monkeypatch):
    real = embedders.km_placement

    def failing(grid, network_id, f, td):
        if network_id == B:
            return None
        return real(grid, network_id, f, td)

    monkeypatch.setattr(embedders, 'km_placement', failing)
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_dynamic_km(DIMS_5, [b], [new(A, 1, 1)])
    assert result.reembed_failures == 1
    assert result.placement_map()[B] == b.placement
    assert result.embedded_ids == (A,)
    assert_consistent(DIMS_5, result)


def test_static_km_never_moves_existing():
    olds = [existing(1, Placement(1, 3, 3, 2, 2)), existing(2, Placement(2, 0, 4, 3, 1))]
    result = embed_static_km(DIMS_5, olds, [new(3, 2, 2), new(4, 1, 3)])
    positions = result.placement_map()
    assert all(positions[r.network_id] == r.placement for r in olds)
    assert_consistent(DIMS_5, result)


# --- combinations ---

@pytest.mark.parametrize('n,expected', [(0, 0), (2, 3), (4, 15)])
def test_enumerate_combinations_counts(n, expected):
    assert len(enumerate_combinations(list(range(n)))) == expected


def test_enumerate_combinations_order():
    assert enumerate_combinations(['a', 'b']) == [('a',), ('b',), ('a', 'b')]


def test_enumerate_combinations_signal():
    with pytest.raises(CombinationExplosion) as exc:
        enumerate_combinations(list(range(5)), cap=4)
    assert (exc.value.count, exc.value.cap) == (5, 4)


# --- dynamic greedy ---

def test_greedy_takes_largest_feasible_combination():
    r1, r2 = new(1, 2, 2), new(2, 3, 3)
    result = embed_dynamic_greedy(DIMS_5, [], [[r1, r2]])
    assert set(result.embedded_ids) == {1, 2}
    assert_consistent(DIMS_5, result)


def test_greedy_area_filter_keeps_one_of_two_large():
    r1, r2 = new(1, 4, 4), new(2, 4, 4)
    result = embed_dynamic_greedy(DIMS_5, [], [[r1, r2]])
    assert result.embedded_ids == (1,)
    assert result.deferred_ids == (2,)


def test_greedy_empty_levels_reembed_existing():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_dynamic_greedy(DIMS_5, [b], [[], []])
    assert result.embedded_ids == () and result.deferred_ids == ()
    assert result.placement_map()[B] == Placement(B, 0, 0, 2, 3)


def test_greedy_accepts_c_in_scripted_example():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_dynamic_greedy(DIMS_5, [b], [[new(C, 3, 3)]])
    assert result.embedded_ids == (C,)
    assert_consistent(DIMS_5, result)


def test_greedy_keeps_higher_priority_choices():
    # The 3x3 of priority 1 wins its level; priority 2 fills around it
    levels = [[new(1, 3, 3, priority=1)], [new(2, 2, 5, priority=2), new(3, 2, 2, priority=2)]]
    result = embed_dynamic_greedy(DIMS_5, [], levels)
    assert 1 in result.embedded_ids
    assert 2 in result.embedded_ids
    assert_consistent(DIMS_5, result)


def test_greedy_explosion_falls_back_to_km():
    level = [new(n, 1, 1) for n in range(1, 14)]
    result = embed_dynamic_greedy(DIMS_5, [], [level], cap=12)
    assert result.explosion_fallbacks == 1
    assert len(result.embedded_ids) == 13


def test_greedy_shared_reembedding_matches_dynamic_km():
    olds = [existing(1, Placement(1, 3, 3, 2, 2)), existing(2, Placement(2, 0, 4, 3, 1))]
    levels = [[new(3, 2, 2), new(4, 1, 3)], [new(5, 2, 1, priority=2), new(6, 3, 3, priority=2)]]
    shared = embed_dynamic_greedy(DIMS_5, olds, levels)
    plain = embed_dynamic_greedy(DIMS_5, olds, levels, inner=embed_dynamic_km)
    assert shared == plain
    assert_consistent(DIMS_5, shared)


def test_greedy_inner_is_pluggable():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    result = embed_dynamic_greedy(DIMS_5, [b], [[new(C, 3, 3)]], inner=embed_static_km)
    assert result.embedded_ids == ()
    assert result.deferred_ids == (C,)


# --- registry ---

def test_mode_parse():
    assert EmbedderMode.parse(' Dynamic-KM ') is EmbedderMode.DYNAMIC_KM
    with pytest.raises(ConfigError):
        EmbedderMode.parse('simulated-annealing')


def test_get_embedder_uniform_signature():
    b = existing(B, Placement(B, 2, 0, 2, 3))
    for mode in EmbedderMode:
        result = get_embedder(mode, costs=(0.5,))(DIMS_5, [b], [new(C, 3, 3)])
        assert set(result.embedded_ids) | set(result.deferred_ids) == {C}
        assert (C in result.embedded_ids) == (not mode.is_static), mode


def test_exact_modes_need_costs():
    with pytest.raises(ConfigError):
        get_embedder(EmbedderMode.EXACT_DYNAMIC)


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-q']))
