"""
Workload generation: Poisson arrivals, request sampling and trace files.

Random streams use numpy's PCG64 bit generator. One master seed is expanded
with SeedSequence(seed).spawn(5) into independent sub-streams, in this order:
arrival counts, frequency span, time span, priority, duration. Any
implementation of PCG64 + SeedSequence reproduces a trace bit for bit.
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from vnesim.errors import ConfigError, ParseError
from vnesim.grid import SubstrateDims

logger = logging.getLogger(__name__)

TRACE_MAGIC = '#vne-trace v1'
SUBSTREAMS = ('arrivals', 'f', 'td', 'p', 'd')
MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class VNRequest:
    """One virtual network request R = (p, f, td, d) plus arrival bookkeeping."""
    id: int
    arrival_slot: int
    p: int
    f: int
    td: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"request {self.id}: duration must be >= 1, got {self.d}")
        if self.f < 1 or self.td < 1:
            raise ValueError(f"request {self.id}: spans must be >= 1, got {self.f}x{self.td}")
        if self.p < 1:
            raise ValueError(f"request {self.id}: priority must be >= 1, got {self.p}")
        if self.arrival_slot < 0:
            raise ValueError(f"request {self.id}: negative arrival slot {self.arrival_slot}")

    @property
    def area(self):
        return self.f * self.td

    @property
    def weight(self):
        """Resource-time volume A * d used by the rejection rate."""
        return self.area * self.d

    def check_bounds(self, dims, K):
        if self.p > K:
            raise ValueError(f"request {self.id}: priority {self.p} exceeds K={K}")
        if self.f > dims.F or self.td > dims.T:
            raise ValueError(
                f"request {self.id}: size {self.f}x{self.td} exceeds substrate {dims}"
            )


def _check_range(name, value, upper):
    lo, hi = value
    if not (1 <= lo <= hi <= upper):
        raise ConfigError(f"{name} must satisfy 1 <= min <= max <= {upper}, got {lo}..{hi}")


@dataclass(frozen=True)
class TrafficConfig:
    dims: SubstrateDims
    lam: float = 3.0
    mu: float = 10.0
    K: int = 3
    f_range: tuple = (1, 3)
    td_range: tuple = (1, 3)
    horizon: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"traffic.lambda must be > 0, got {self.lam}")
        if not self.mu >= 1:
            raise ConfigError(f"traffic.mu must be >= 1, got {self.mu}")
        if self.K < 1:
            raise ConfigError(f"traffic.K must be >= 1, got {self.K}")
        if self.horizon < 0:
            raise ConfigError(f"traffic.horizon must be >= 0, got {self.horizon}")
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit value, got {self.seed}")
        _check_range('traffic.f', self.f_range, self.dims.F)
        _check_range('traffic.td', self.td_range, self.dims.T)

    def with_seed(self, seed):
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Trace:
    config: TrafficConfig
    slots: tuple

    @classmethod
    def from_requests(cls, config, requests):
        """Group requests into per-slot tuples, checking order and id uniqueness."""
        buckets = [[] for _ in range(config.horizon)]
        seen = set()
        previous = None
        for r in requests:
            key = (r.arrival_slot, r.id)
            if previous is not None and key <= previous:
                raise ValueError(f"requests not sorted by (slot, id) at request {r.id}")
            if r.id in seen:
                raise ValueError(f"duplicate request id {r.id}")
            if r.arrival_slot >= config.horizon:
                raise ValueError(
                    f"request {r.id} arrives in slot {r.arrival_slot} beyond horizon {config.horizon}"
                )
            r.check_bounds(config.dims, config.K)
            seen.add(r.id)
            previous = key
            buckets[r.arrival_slot].append(r)
        return cls(config, tuple(tuple(b) for b in buckets))

    @property
    def requests(self):
        return tuple(r for slot in self.slots for r in slot)

    @property
    def horizon(self):
        return len(self.slots)

    def __len__(self):
        return sum(len(slot) for slot in self.slots)


def substreams(seed):
    """The five independent generators derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(len(SUBSTREAMS))
    return dict(zip(SUBSTREAMS, (np.random.Generator(np.random.PCG64(c)) for c in children)))


def generate_trace(config):
    """
    Poisson(lambda) arrivals per slot; f, td, p integer-uniform (inclusive);
    d = ceil(Exponential(mean mu)), at least 1.
    """
    rng = substreams(config.seed)

    counts = rng['arrivals'].poisson(config.lam, size=config.horizon)
    n = int(counts.sum())
    f = rng['f'].integers(config.f_range[0], config.f_range[1], size=n, endpoint=True)
    td = rng['td'].integers(config.td_range[0], config.td_range[1], size=n, endpoint=True)
    p = rng['p'].integers(1, config.K, size=n, endpoint=True)
    d = np.maximum(1, np.ceil(rng['d'].exponential(config.mu, size=n))).astype(np.int64)
    arrival = np.repeat(np.arange(config.horizon), counts)

    requests = [
        VNRequest(
            id=k + 1,
            arrival_slot=int(arrival[k]),
            p=int(p[k]),
            f=int(f[k]),
            td=int(td[k]),
            d=int(d[k]),
        )
        for k in range(n)
    ]
    logger.debug(f"Generated {n} requests over {config.horizon} slots (seed={config.seed})")
    return Trace.from_requests(config, requests)


def format_header(config):
    """Required fields first, then the generator settings as optional key=value fields."""
    return (
        f"{TRACE_MAGIC} F={config.dims.F} T={config.dims.T} K={config.K} "
        f"seed={config.seed} horizon={config.horizon} "
        f"lambda={config.lam!r} mu={config.mu!r} "
        f"f={config.f_range[0]}..{config.f_range[1]} "
        f"td={config.td_range[0]}..{config.td_range[1]}"
    )


def save_trace(trace, destination):
    """Write the line-oriented trace file (one header line, then slot,id,p,f,td,d records)."""
    lines = [format_header(trace.config)]
    for r in trace.requests:
        lines.append(f"{r.arrival_slot},{r.id},{r.p},{r.f},{r.td},{r.d}")

    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')


def _parse_fields(text, line_no):
    fields = {}
    for token in text.split():
        key, sep, value = token.partition('=')
        if not sep:
            raise ParseError(f"expected key=value, got {token!r}", line_no)
        fields[key] = value
    return fields


def _parse_range(value, line_no):
    lo, sep, hi = value.partition('..')
    if not sep:
        raise ParseError(f"expected a range a..b, got {value!r}", line_no)
    return (int(lo), int(hi))


def load_trace(source):
    """Parse a trace file written by save_trace (or by hand)."""
    path = Path(source)
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()

    if not lines or not lines[0].startswith(TRACE_MAGIC):
        raise ParseError(f"missing '{TRACE_MAGIC}' header", 1)

    try:
        header = _parse_fields(lines[0][len(TRACE_MAGIC):], 1)
        dims = SubstrateDims(int(header['F']), int(header['T']))
        K = int(header['K'])
        seed = int(header['seed'])
        horizon = int(header['horizon'])

        # Optional; hand-written traces usually leave them out
        options = {'f_range': (1, dims.F), 'td_range': (1, dims.T)}
        if 'lambda' in header:
            options['lam'] = float(header['lambda'])
        if 'mu' in header:
            options['mu'] = float(header['mu'])
        if 'f' in header:
            options['f_range'] = _parse_range(header['f'], 1)
        if 'td' in header:
            options['td_range'] = _parse_range(header['td'], 1)
    except (KeyError, ValueError, ConfigError) as e:
        raise ParseError(f"bad header: {e}", 1) from e

    requests = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith('#'):
            continue

        parts = line.split(',')
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields slot,id,p,f,td,d, got {len(parts)}", line_no)
        try:
            slot, rid, p, f, td, d = (int(x) for x in parts)
            request = VNRequest(id=rid, arrival_slot=slot, p=p, f=f, td=td, d=d)
            request.check_bounds(dims, K)
        except ValueError as e:
            raise ParseError(str(e), line_no) from e
        if requests and (slot, rid) <= (requests[-1][1].arrival_slot, requests[-1][1].id):
            raise ParseError(f"records not sorted by (slot, id) at request {rid}", line_no)
        requests.append((line_no, request))

    try:
        config = TrafficConfig(dims=dims, K=K, horizon=horizon, seed=seed, **options)
    except ConfigError as e:
        raise ParseError(str(e), 1) from e

    seen = set()
    for line_no, r in requests:
        if r.id in seen:
            raise ParseError(f"duplicate request id {r.id}", line_no)
        if r.arrival_slot >= horizon:
            raise ParseError(f"slot {r.arrival_slot} is beyond horizon {horizon}", line_no)
        seen.add(r.id)

    return Trace.from_requests(config, [r for _, r in requests])
