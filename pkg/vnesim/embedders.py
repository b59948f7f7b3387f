"""
Embedding strategies: static Karnaugh-map (KM), dynamic KM and the dynamic
greedy combination search. The exact staged optimization lives in
vnesim.oracle; get_embedder() hands out any of them behind one signature:

    embedder(dims, existing, new_requests) -> StageResult
"""
import enum
import itertools
import logging
from dataclasses import dataclass, replace

from vnesim import config
from vnesim.errors import (
    CombinationExplosion,
    ConfigError,
    InvalidStateError,
    OutOfBoundsError,
    OverlapError,
)
from vnesim.grid import OccupancyGrid, best_corner, find_vacant_regions, place

logger = logging.getLogger(__name__)


class RequestKind(enum.Enum):
    NEW = 'new'
    EXISTING = 'existing'


class EmbedderMode(enum.Enum):
    STATIC_KM = 'static-km'
    DYNAMIC_KM = 'dynamic-km'
    DYNAMIC_GREEDY = 'dynamic-greedy'
    EXACT_STATIC = 'exact-static'
    EXACT_DYNAMIC = 'exact-dynamic'

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ', '.join(m.value for m in cls)
            raise ConfigError(f"unknown embedder mode {text!r} (expected one of: {names})") from None

    @property
    def is_static(self):
        return self in (EmbedderMode.STATIC_KM, EmbedderMode.EXACT_STATIC)

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EmbedRequest:
    """
    A network to embed this timeslot. EXISTING entries are already active and
    carry their previous placement; NEW entries come from the buffer.
    """
    network_id: int
    priority: int
    f: int
    td: int
    kind: RequestKind = RequestKind.NEW
    placement: object = None
    arrival: int = 0

    def __post_init__(self):
        if self.priority < 1:
            raise ValueError(f"network {self.network_id}: priority must be >= 1")
        if self.f < 1 or self.td < 1:
            raise ValueError(f"network {self.network_id}: spans must be >= 1")
        if self.placement is not None and (self.placement.f, self.placement.td) != (self.f, self.td):
            raise InvalidStateError(
                f"network {self.network_id}: placement {self.placement.f}x{self.placement.td} "
                f"does not match request {self.f}x{self.td}"
            )

    @property
    def area(self):
        return self.f * self.td

    @property
    def is_existing(self):
        return self.kind is RequestKind.EXISTING

    @classmethod
    def new(cls, request):
        """From a buffered traffic.VNRequest."""
        return cls(request.id, request.p, request.f, request.td, RequestKind.NEW, None, request.arrival_slot)

    @classmethod
    def existing(cls, request, placement):
        return cls(request.id, request.p, request.f, request.td, RequestKind.EXISTING,
                   placement, request.arrival_slot)

    def as_existing(self, placement):
        return replace(self, kind=RequestKind.EXISTING, placement=placement)


@dataclass(frozen=True)
class StageResult:
    """
    Outcome of one timeslot's embedding. embedded_ids and deferred_ids list
    NEW requests only; every EXISTING network is in placements.
    """
    placements: tuple = ()
    embedded_ids: tuple = ()
    deferred_ids: tuple = ()
    reembed_failures: int = 0
    explosion_fallbacks: int = 0

    def placement_map(self):
        return {p.network_id: p for p in self.placements}


def new_request_order(r):
    """Priority first (1 = highest), then decreasing area, arrival order, id."""
    return (r.priority, -r.area, r.arrival, r.network_id)


def existing_order(r):
    return (-r.area, r.network_id)


def group_by_priority(requests, K=None):
    """Lists of requests for priorities 1..K (K defaults to the highest priority present)."""
    if K is None:
        K = max((r.priority for r in requests), default=0)
    levels = [[] for _ in range(K)]
    for r in requests:
        if r.priority > K:
            raise ValueError(f"network {r.network_id}: priority {r.priority} exceeds K={K}")
        levels[r.priority - 1].append(r)
    return levels


def km_placement(grid, network_id, f, td):
    """Smallest feasible maximal vacant region, best EDI corner; None if nothing fits."""
    regions = find_vacant_regions(grid, f, td)
    if not regions:
        return None
    return best_corner(grid, regions[0], f, td, network_id)


def _place_new(grid, new_requests):
    placed = []
    deferred = []
    for r in sorted(new_requests, key=new_request_order):
        p = km_placement(grid, r.network_id, r.f, r.td)
        if p is None:
            deferred.append(r.network_id)
            continue
        grid = place(grid, p)
        placed.append(p)
    return grid, placed, deferred


def _existing_grid(dims, existing):
    for r in existing:
        if r.placement is None:
            raise InvalidStateError(f"existing network {r.network_id} has no previous placement")
    try:
        return OccupancyGrid.from_placements(dims, [r.placement for r in existing])
    except (OverlapError, OutOfBoundsError) as e:
        raise InvalidStateError(f"existing placements are inconsistent: {e}") from e


def embed_static_km(dims, existing, new_requests):
    """Existing networks stay where they are; new requests are packed around them."""
    grid = _existing_grid(dims, existing)
    grid, placed, deferred = _place_new(grid, new_requests)
    return StageResult(
        placements=tuple(r.placement for r in existing) + tuple(placed),
        embedded_ids=tuple(p.network_id for p in placed),
        deferred_ids=tuple(deferred),
    )


def _check_capacity(dims, existing):
    total = sum(r.area for r in existing)
    if total > dims.capacity:
        raise InvalidStateError(f"existing networks need {total} blocks, substrate has {dims.capacity}")


def _reembed_existing(dims, existing):
    """
    Existing networks packed on an empty substrate, largest first.
    Returns (grid, placements, None), or (None, (), network) for the first
    network that no longer fits.
    """
    grid = OccupancyGrid.empty(dims)
    reembedded = []
    for r in sorted(existing, key=existing_order):
        p = km_placement(grid, r.network_id, r.f, r.td)
        if p is None:
            logger.warning(
                f"Re-embedding failed for network {r.network_id} ({r.f}x{r.td}); "
                f"keeping previous placements this timeslot"
            )
            return None, (), r
        grid = place(grid, p)
        reembedded.append(p)
    return grid, tuple(reembedded), None


def _dynamic_km_from(dims, existing, new_requests, reembedding):
    grid, reembedded, failed = reembedding
    if failed is not None:
        fallback = embed_static_km(dims, existing, new_requests)
        return replace(fallback, reembed_failures=fallback.reembed_failures + 1)

    grid, placed, deferred = _place_new(grid, new_requests)
    return StageResult(
        placements=reembedded + tuple(placed),
        embedded_ids=tuple(p.network_id for p in placed),
        deferred_ids=tuple(deferred),
    )


def embed_dynamic_km(dims, existing, new_requests):
    """
    Re-embed every existing network on an empty substrate (largest first),
    then the new requests. If an existing network no longer fits, this
    timeslot falls back to static embedding and reembed_failures is set.
    """
    _check_capacity(dims, existing)
    return _dynamic_km_from(dims, existing, new_requests, _reembed_existing(dims, existing))


def _shared_reembedding_km():
    """
    embed_dynamic_km for one greedy search: every candidate subset starts
    from the same existing networks, so each distinct set is re-packed once.
    """
    packed = {}

    def inner(dims, existing, new_requests):
        key = (dims, tuple(existing))
        if key not in packed:
            _check_capacity(dims, existing)
            packed[key] = _reembed_existing(dims, existing)
        return _dynamic_km_from(dims, existing, new_requests, packed[key])
    return inner


def enumerate_combinations(requests, cap=None):
    """
    Every non-empty subset, by size then in itertools.combinations order.
    Raises the CombinationExplosion signal when len(requests) > cap.
    """
    cap = config.COMBINATION_CAP if cap is None else cap
    if len(requests) > cap:
        raise CombinationExplosion(len(requests), cap)
    return [
        combo
        for n in range(1, len(requests) + 1)
        for combo in itertools.combinations(requests, n)
    ]


def embed_dynamic_greedy(dims, existing, new_by_priority, cap=None, inner=None):
    """
    Greedy combination embedding. For each priority level, try the level's
    request subsets joined with the networks already chosen, largest total
    area first, until the inner embedder places all of them. The empty
    subset is tried last and always succeeds.
    """
    inner = _shared_reembedding_km() if inner is None else inner
    current = list(existing)
    attempt = None
    embedded = []
    deferred = []
    reembed_failures = 0
    explosion_fallbacks = 0

    for level in new_by_priority:
        if not level:
            continue
        level = sorted(level, key=lambda r: (r.arrival, r.network_id))
        base_area = sum(r.area for r in current)

        try:
            subsets = enumerate_combinations(level, cap)
        except CombinationExplosion as signal:
            logger.warning(f"{signal}; priority {level[0].priority} uses KM ordering")
            explosion_fallbacks += 1
            attempt = inner(dims, current, level)
            chosen_ids = set(attempt.embedded_ids)
        else:
            candidates = [c for c in subsets if base_area + sum(r.area for r in c) <= dims.capacity]
            candidates.sort(key=lambda c: -sum(r.area for r in c))
            candidates.append(())
            for combo in candidates:
                attempt = inner(dims, current, list(combo))
                if not attempt.deferred_ids:
                    break
            chosen_ids = {r.network_id for r in combo}

        reembed_failures += attempt.reembed_failures
        positions = attempt.placement_map()
        current = [r.as_existing(positions[r.network_id]) for r in current]
        for r in level:
            if r.network_id in chosen_ids:
                current.append(r.as_existing(positions[r.network_id]))
                embedded.append(r.network_id)
            else:
                deferred.append(r.network_id)

    if attempt is None:
        attempt = inner(dims, current, [])
        reembed_failures += attempt.reembed_failures

    return StageResult(
        placements=attempt.placements,
        embedded_ids=tuple(embedded),
        deferred_ids=tuple(deferred),
        reembed_failures=reembed_failures,
        explosion_fallbacks=explosion_fallbacks,
    )


def get_embedder(mode, costs=None, cap=None):
    """
    Uniform callable for a mode. Exact modes need the per-priority costs
    (costs[k-1] for priority k).
    """
    if mode is EmbedderMode.STATIC_KM:
        return embed_static_km
    if mode is EmbedderMode.DYNAMIC_KM:
        return embed_dynamic_km
    if mode is EmbedderMode.DYNAMIC_GREEDY:
        def greedy(dims, existing, new_requests):
            return embed_dynamic_greedy(dims, existing, group_by_priority(new_requests), cap=cap)
        return greedy

    from vnesim.oracle import embed_exact
    if costs is None:
        raise ConfigError(f"mode {mode} needs priority costs")

    def exact(dims, existing, new_requests):
        result, _ = embed_exact(dims, existing, group_by_priority(new_requests), mode, costs)
        return result
    return exact
