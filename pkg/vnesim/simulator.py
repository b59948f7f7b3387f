"""
Time-slotted control loop: request buffer with per-priority maximum delay,
expiry, one embedding per timeslot, and revenue / rejection metrics.

Order inside a timeslot:
  1. active networks lose one slot of lifetime; those at 0 expire
  2. the slot's arrivals join the buffer
  3. the embedder runs on (active networks, whole buffer)
  4. embedded buffer entries become active with their full duration
  5. every other buffer entry has waited one more slot; entries that reach
     max_delay for their priority are rejected
  6. metrics are taken on the resulting state
"""
import logging
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np

from vnesim.embedders import EmbedRequest, EmbedderMode, get_embedder
from vnesim.errors import ConfigError, InvalidStateError, OutOfBoundsError, OverlapError
from vnesim.grid import OccupancyGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BufferEntry:
    request: object
    slots_waited: int = 0


@dataclass(frozen=True)
class ActiveNetwork:
    request: object
    placement: object
    remaining: int


@dataclass(frozen=True)
class PriorityCosts:
    """Revenue per resource block per timeslot, values[k-1] for priority k."""
    values: tuple = (0.5, 0.3, 0.2)

    def __post_init__(self):
        if not self.values:
            raise ConfigError("at least one priority cost is required")
        if any(v <= 0 for v in self.values):
            raise ConfigError(f"priority costs must be positive, got {self.values}")
        if any(a <= b for a, b in zip(self.values, self.values[1:])):
            raise ConfigError(f"priority costs must strictly decrease with priority, got {self.values}")

    @property
    def K(self):
        return len(self.values)

    def of(self, priority):
        return self.values[priority - 1]


@dataclass(frozen=True)
class SimulationSettings:
    dims: object
    mode: EmbedderMode = EmbedderMode.STATIC_KM
    costs: PriorityCosts = field(default_factory=PriorityCosts)
    max_delays: tuple = (1, 2, 3)
    combination_cap: int = None

    def __post_init__(self):
        if len(self.max_delays) < self.costs.K:
            raise ConfigError(
                f"{self.costs.K} priority costs but only {len(self.max_delays)} max delays"
            )
        if any(d < 1 for d in self.max_delays):
            raise ConfigError(f"max delays must be >= 1, got {self.max_delays}")

    def max_delay(self, priority):
        return self.max_delays[priority - 1]

    def embedder(self):
        return get_embedder(self.mode, costs=self.costs.values, cap=self.combination_cap)


@dataclass(frozen=True)
class SimulationState:
    slot: int = 0
    active: tuple = ()
    buffer: tuple = ()


@dataclass(frozen=True)
class TimeslotMetrics:
    slot: int
    revenue: float
    rejection_rate: float = None
    accepted: int = 0
    rejected: int = 0
    deferred: int = 0
    occupancy: float = 0.0
    reembed_failures: int = 0
    rejected_ids: tuple = ()
    # (rejected A*d, resolved A*d) per priority
    priority_weights: tuple = ()


def revenue_of_slot(active, costs):
    """Sum over active networks of p_s * f * td."""
    return float(sum(costs.of(a.request.p) * a.request.area for a in active))


def rejection_rate_of_slot(resolved):
    """
    Resource-time weighted rejection fraction of the requests resolved this
    slot: sum of A*d over rejected / sum of A*d over accepted or rejected.
    None when nothing resolved.
    """
    total = sum(r.weight for r, _ in resolved)
    if total == 0:
        return None
    rejected = sum(r.weight for r, accepted in resolved if not accepted)
    return rejected / total


def _priority_weights(resolved, K):
    weights = [[0, 0] for _ in range(K)]
    for r, accepted in resolved:
        w = weights[r.p - 1]
        w[1] += r.weight
        if not accepted:
            w[0] += r.weight
    return tuple(tuple(w) for w in weights)


def step(state, arrivals, settings, embedder=None):
    """Advance one timeslot. Returns (new state, TimeslotMetrics)."""
    dims = settings.dims
    embedder = settings.embedder() if embedder is None else embedder

    survivors = [replace(a, remaining=a.remaining - 1) for a in state.active if a.remaining > 1]
    buffer = list(state.buffer) + [BufferEntry(r) for r in arrivals]

    existing = [EmbedRequest.existing(a.request, a.placement) for a in survivors]
    new = [EmbedRequest.new(e.request) for e in buffer]
    result = embedder(dims, existing, new)
    positions = result.placement_map()

    try:
        active = [replace(a, placement=positions[a.request.id]) for a in survivors]
    except KeyError as e:
        raise InvalidStateError(f"embedder dropped existing network {e.args[0]}") from e

    embedded = set(result.embedded_ids)
    resolved = []
    waiting = []
    rejected_ids = []
    for entry in buffer:
        r = entry.request
        if r.id in embedded:
            active.append(ActiveNetwork(r, positions[r.id], r.d))
            resolved.append((r, True))
            continue
        waited = entry.slots_waited + 1
        if waited >= settings.max_delay(r.p):
            resolved.append((r, False))
            rejected_ids.append(r.id)
        else:
            waiting.append(BufferEntry(r, waited))

    try:
        grid = OccupancyGrid.from_placements(dims, [a.placement for a in active])
    except (OverlapError, OutOfBoundsError) as e:
        raise InvalidStateError(f"slot {state.slot}: inconsistent embedding: {e}") from e

    if result.reembed_failures:
        logger.debug(f"slot {state.slot}: {result.reembed_failures} re-embedding failure(s)")

    active.sort(key=lambda a: a.request.id)
    metrics = TimeslotMetrics(
        slot=state.slot,
        revenue=revenue_of_slot(active, settings.costs),
        rejection_rate=rejection_rate_of_slot(resolved),
        accepted=sum(1 for _, ok in resolved if ok),
        rejected=len(rejected_ids),
        deferred=len(waiting),
        occupancy=grid.occupancy,
        reembed_failures=result.reembed_failures,
        rejected_ids=tuple(rejected_ids),
        priority_weights=_priority_weights(resolved, settings.costs.K),
    )
    return SimulationState(state.slot + 1, tuple(active), tuple(waiting)), metrics


def running_mean(values):
    """Cumulative mean skipping None entries; nan until the first defined value."""
    arr = np.array([np.nan if v is None else v for v in values], dtype=float)
    defined = ~np.isnan(arr)
    sums = np.cumsum(np.where(defined, arr, 0.0))
    counts = np.cumsum(defined)
    with np.errstate(invalid='ignore', divide='ignore'):
        return sums / counts


def _defined_mean(values):
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else float('nan')


@dataclass(frozen=True, eq=False)
class SimulationSummary:
    mode: EmbedderMode
    seed: int
    metrics: tuple
    running_revenue: np.ndarray
    running_rejection: np.ndarray
    mean_revenue: float
    mean_rejection_rate: float
    priority_rejection: tuple
    total_revenue: float
    requests: int
    accepted: int
    rejected: int
    reembed_failures: int

    @property
    def rejected_ids(self):
        return tuple(rid for m in self.metrics for rid in m.rejected_ids)


def summarize(metrics, settings, seed):
    metrics = tuple(metrics)
    revenues = [m.revenue for m in metrics]
    rates = [m.rejection_rate for m in metrics]
    priority_rejection = []
    for k in range(settings.costs.K):
        per_slot = []
        for m in metrics:
            rejected, resolved = m.priority_weights[k]
            per_slot.append(rejected / resolved if resolved else None)
        priority_rejection.append(_defined_mean(per_slot))

    accepted = sum(m.accepted for m in metrics)
    rejected = sum(m.rejected for m in metrics)
    return SimulationSummary(
        mode=settings.mode,
        seed=seed,
        metrics=metrics,
        running_revenue=running_mean(revenues),
        running_rejection=running_mean(rates),
        mean_revenue=float(np.mean(revenues)) if revenues else 0.0,
        mean_rejection_rate=_defined_mean(rates),
        priority_rejection=tuple(priority_rejection),
        total_revenue=float(sum(revenues)),
        requests=accepted + rejected,
        accepted=accepted,
        rejected=rejected,
        reembed_failures=sum(m.reembed_failures for m in metrics),
    )


def run(trace, settings, drain=True):
    """
    Fold step() over every slot of the trace. With drain, keep stepping
    without arrivals until the buffer is empty so every request resolves.
    """
    if trace.config.dims != settings.dims:
        raise ConfigError(f"trace substrate {trace.config.dims} does not match {settings.dims}")
    if trace.config.K > settings.costs.K:
        raise ConfigError(f"trace has {trace.config.K} priorities, only {settings.costs.K} costs configured")

    embedder = settings.embedder()
    state = SimulationState()
    metrics = []
    for arrivals in trace.slots:
        state, m = step(state, arrivals, settings, embedder)
        metrics.append(m)
    while drain and state.buffer:
        state, m = step(state, (), settings, embedder)
        metrics.append(m)

    summary = summarize(metrics, settings, trace.config.seed)
    logger.info(
        f"{settings.mode} seed={trace.config.seed}: revenue={summary.mean_revenue:.4f} "
        f"rejection={summary.mean_rejection_rate:.4f} "
        f"({summary.accepted} accepted, {summary.rejected} rejected, "
        f"{summary.reembed_failures} re-embedding failures)"
    )
    return summary


def run_many(jobs, workers=1):
    """Run (trace, settings) jobs, in parallel when workers > 1; results keep job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [run(trace, settings) for trace, settings in jobs]
    with Pool(processes=min(workers, len(jobs))) as pool:
        return pool.starmap(run, jobs)


def standard_error(values):
    arr = np.asarray([v for v in values if not np.isnan(v)], dtype=float)
    if len(arr) < 2:
        return 0.0
    return float(arr.std(ddof=1) / np.sqrt(len(arr)))


def _nanmean(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    return float(arr.mean()) if len(arr) else float('nan')


@dataclass(frozen=True)
class ReplicationAggregate:
    mode: EmbedderMode
    seeds: tuple
    mean_revenue: float
    se_revenue: float
    mean_rejection: float
    se_rejection: float
    priority_rejection: tuple
    priority_rejection_se: tuple


def aggregate(summaries):
    """Means and standard errors across replications of one mode."""
    summaries = list(summaries)
    if not summaries:
        raise ValueError("no summaries to aggregate")
    K = len(summaries[0].priority_rejection)
    revenues = [s.mean_revenue for s in summaries]
    rejections = [s.mean_rejection_rate for s in summaries]
    per_priority = [[s.priority_rejection[k] for s in summaries] for k in range(K)]
    return ReplicationAggregate(
        mode=summaries[0].mode,
        seeds=tuple(s.seed for s in summaries),
        mean_revenue=_nanmean(revenues),
        se_revenue=standard_error(revenues),
        mean_rejection=_nanmean(rejections),
        se_rejection=standard_error(rejections),
        priority_rejection=tuple(_nanmean(v) for v in per_priority),
        priority_rejection_se=tuple(standard_error(v) for v in per_priority),
    )
