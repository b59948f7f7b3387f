#!/usr/bin/env python3
"""
Traffic generation and trace files.

Usage: python scripts/test_traffic.py
"""
import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from vnesim.errors import ConfigError, ParseError  # noqa: E402
from vnesim.grid import SubstrateDims  # noqa: E402
from vnesim.traffic import (  # noqa: E402
    TrafficConfig,
    Trace,
    VNRequest,
    generate_trace,
    load_trace,
    save_trace,
)

DIMS = SubstrateDims(12, 12)


def default_config(seed=0, **kwargs):
    return TrafficConfig(dims=DIMS, seed=seed, **kwargs)


def test_same_seed_same_trace():
    assert generate_trace(default_config(5)) == generate_trace(default_config(5))


def test_different_seeds_differ():
    assert generate_trace(default_config(1)).requests != generate_trace(default_config(2)).requests


def test_request_count_concentration():
    counts = [len(generate_trace(default_config(seed))) for seed in range(20)]
    assert all(2700 <= n <= 3300 for n in counts), counts
    assert abs(np.mean(counts) - 3000) <= 100


def test_attribute_distributions():
    requests = [r for seed in range(5) for r in generate_trace(default_config(seed)).requests]
    durations = np.array([r.d for r in requests])
    assert 10.0 <= durations.mean() <= 11.0
    assert durations.min() >= 1

    f = np.array([r.f for r in requests])
    td = np.array([r.td for r in requests])
    assert set(f) == {1, 2, 3} and set(td) == {1, 2, 3}

    # Chi-square against uniform priorities, 2 dof, 0.1% critical value 13.82
    counts = np.bincount([r.p for r in requests], minlength=4)[1:]
    expected = len(requests) / 3
    assert ((counts - expected) ** 2 / expected).sum() < 13.82


def test_arrivals_sorted_and_ids_unique():
    trace = generate_trace(default_config(3, horizon=50))
    keys = [(r.arrival_slot, r.id) for r in trace.requests]
    assert keys == sorted(keys)
    assert len({r.id for r in trace.requests}) == len(trace)
    assert trace.horizon == 50


def test_tiny_rate_is_allowed():
    trace = generate_trace(default_config(0, lam=0.001, horizon=10))
    assert trace.horizon == 10
    assert len(trace) <= 1


def test_large_request_sizes():
    trace = generate_trace(default_config(0, lam=1.0, f_range=(2, 5), td_range=(2, 5), horizon=200))
    assert all(2 <= r.f <= 5 and 2 <= r.td <= 5 for r in trace.requests)


@pytest.mark.parametrize('kwargs', [
    {'lam': 0.0},
    {'mu': 0.5},
    {'K': 0},
    {'f_range': (2, 1)},
    {'td_range': (1, 13)},
    {'horizon': -1},
])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        default_config(**kwargs)


def test_save_load_round_trip(tmp_path):
    trace = generate_trace(default_config(9, horizon=40))
    path = tmp_path / 'trace.txt'
    save_trace(trace, path)
    assert load_trace(path) == trace
    assert b'\r\n' not in path.read_bytes()


def test_empty_trace_round_trip(tmp_path):
    trace = generate_trace(default_config(0, horizon=0))
    path = tmp_path / 'empty.txt'
    save_trace(trace, path)
    lines = path.read_text().splitlines()
    assert lines == ['#vne-trace v1 F=12 T=12 K=3 seed=0 horizon=0 lambda=3.0 mu=10.0 f=1..3 td=1..3']
    loaded = load_trace(path)
    assert len(loaded) == 0
    assert loaded.config == trace.config


def test_header_settings_are_optional(tmp_path):
    path = write(tmp_path, '#vne-trace v1 F=6 T=4 K=2 seed=7 horizon=3 mu=2.5 td=2..4\n0,1,2,1,2,1\n')
    config = load_trace(path).config
    assert (config.mu, config.td_range, config.f_range) == (2.5, (2, 4), (1, 6))
    assert config.lam == TrafficConfig(dims=SubstrateDims(6, 4)).lam


def test_bad_header_range_is_parse_error(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_trace(write(tmp_path, '#vne-trace v1 F=5 T=5 K=1 seed=0 horizon=2 f=1-3\n'))
    assert exc.value.line == 1


def write(tmp_path, text):
    path = tmp_path / 'trace.txt'
    path.write_text(text)
    return path


def test_zero_duration_is_parse_error(tmp_path):
    path = write(tmp_path, '#vne-trace v1 F=5 T=5 K=1 seed=0 horizon=2\n0,1,1,2,3,0\n')
    with pytest.raises(ParseError) as exc:
        load_trace(path)
    assert exc.value.line == 2


def test_missing_header_is_parse_error(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_trace(write(tmp_path, '0,1,1,2,3,1\n'))
    assert exc.value.line == 1


def test_unsorted_records_are_parse_error(tmp_path):
    path = write(tmp_path, '#vne-trace v1 F=5 T=5 K=1 seed=0 horizon=2\n1,2,1,1,1,1\n0,1,1,1,1,1\n')
    with pytest.raises(ParseError) as exc:
        load_trace(path)
    assert exc.value.line == 3


def test_wrong_field_count_is_parse_error(tmp_path):
    path = write(tmp_path, '#vne-trace v1 F=5 T=5 K=1 seed=0 horizon=2\n0,1,1,2,3\n')
    with pytest.raises(ParseError):
        load_trace(path)


def test_hand_written_trace_defaults_ranges(tmp_path):
    path = write(tmp_path, '#vne-trace v1 F=5 T=5 K=1 seed=0 horizon=2\n\n0,1,1,2,3,1\n# note\n1,3,1,3,3,1\n')
    trace = load_trace(path)
    assert trace.config.f_range == (1, 5)
    assert [r.id for r in trace.slots[1]] == [3]


def test_from_requests_rejects_duplicates():
    config = TrafficConfig(dims=SubstrateDims(5, 5), K=1, horizon=2)
    r = VNRequest(id=1, arrival_slot=0, p=1, f=1, td=1, d=1)
    with pytest.raises(ValueError):
        Trace.from_requests(config, [r, VNRequest(id=1, arrival_slot=1, p=1, f=1, td=1, d=1)])


if __name__ == '__main__':
    sys.exit(pytest.main([__file__, '-q']))
