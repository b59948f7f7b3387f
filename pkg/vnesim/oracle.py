"""
Exact staged optimization of one timeslot's embedding, plus an independent
checker for the embedding constraints.

Stages are the existing networks (stage 0, mandatory) followed by priority
levels 1..K (optional). Solving stage k to optimality while keeping every
network chosen in earlier stages embedded is the same as maximizing the
vector (embedded area of priority 1, ..., embedded area of priority K)
lexicographically, so a single depth-first branch and bound over that
vector solves all stages at once. Ties between optimal embeddings go to the
lexicographically smallest placement vector: networks in (stage, id) order,
origins row-major, "not embedded" after every origin.

Cells are bits of a Python int (bit i*T + j), which keeps overlap tests to a
single AND. Meant for small substrates (F*T <= 64) and a handful of requests.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from vnesim.embedders import StageResult
from vnesim.errors import ConfigError, InfeasibleError
from vnesim.grid import Placement

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def _shape_options(F, T, f, td):
    """(mask, origin_i, origin_j) for every origin of an f x td rectangle, row-major."""
    if f > F or td > T:
        return ()
    row = (1 << td) - 1
    options = []
    for i in range(F - f + 1):
        for j in range(T - td + 1):
            mask = 0
            for r in range(f):
                mask |= row << ((i + r) * T + j)
            options.append((mask, i, j))
    return tuple(options)


def _placement_mask(dims, p):
    row = (1 << p.td) - 1
    mask = 0
    for r in range(p.f):
        mask |= row << ((p.origin_i + r) * dims.T + p.origin_j)
    return mask


@dataclass
class _Item:
    request: object
    stage: int
    mandatory: bool
    options: tuple

    @property
    def area(self):
        return self.request.area


class _Search:

    def __init__(self, items, n_stages, capacity):
        self.items = items
        self.n_stages = n_stages
        self.capacity = capacity
        self.value = [0] * n_stages
        self.choice = [None] * len(items)
        self.best_value = None
        self.best_choice = None
        self.nodes = 0
        # Mandatory area still to place from index idx onwards
        self.mandatory_suffix = [0] * (len(items) + 1)
        for idx in range(len(items) - 1, -1, -1):
            it = items[idx]
            self.mandatory_suffix[idx] = self.mandatory_suffix[idx + 1] + (it.area if it.mandatory else 0)

    def _bound(self, idx, used):
        """Per-stage upper bound on the objective vector below this node, or None if infeasible."""
        free = self.capacity - used.bit_count() - self.mandatory_suffix[idx]
        if free < 0:
            return None
        remaining = [0] * self.n_stages
        for it in self.items[idx:]:
            if it.mandatory:
                continue
            if any(not (mask & used) for mask, _, _ in it.options):
                remaining[it.stage - 1] += it.area
        return tuple(v + min(r, free) for v, r in zip(self.value, remaining))

    def run(self):
        self._dfs(0, 0)
        return self.best_value, self.best_choice

    def _dfs(self, idx, used):
        self.nodes += 1
        if idx == len(self.items):
            current = tuple(self.value)
            if self.best_value is None or current > self.best_value:
                self.best_value = current
                self.best_choice = list(self.choice)
            return

        bound = self._bound(idx, used)
        if bound is None:
            return
        if self.best_value is not None and bound <= self.best_value:
            return

        it = self.items[idx]
        for option in it.options:
            mask = option[0]
            if mask & used:
                continue
            self.choice[idx] = option
            if not it.mandatory:
                self.value[it.stage - 1] += it.area
            self._dfs(idx + 1, used | mask)
            if not it.mandatory:
                self.value[it.stage - 1] -= it.area
        self.choice[idx] = None

        if not it.mandatory:
            self._dfs(idx + 1, used)


def price_of(costs, priority):
    if not 1 <= priority <= len(costs):
        raise ConfigError(f"no cost configured for priority {priority}")
    return costs[priority - 1]


def embed_exact(dims, existing, new_by_priority, mode, costs):
    """
    Exact embedding. In static mode existing networks keep their previous
    placements; networks embedded at earlier stages of this timeslot may
    still move. Returns (StageResult, revenue) where revenue is the sum of
    p_s * area over every embedded network.
    """
    static = mode.is_static
    total = sum(r.area for r in existing)
    if total > dims.capacity:
        raise InfeasibleError(f"existing networks need {total} blocks, substrate has {dims.capacity}")

    items = []
    for r in sorted(existing, key=lambda r: r.network_id):
        if static:
            if r.placement is None:
                raise InfeasibleError(f"existing network {r.network_id} has no previous placement")
            if not r.placement.fits(dims):
                raise InfeasibleError(f"existing network {r.network_id} lies outside the substrate")
            options = ((_placement_mask(dims, r.placement), r.placement.origin_i, r.placement.origin_j),)
        else:
            options = _shape_options(dims.F, dims.T, r.f, r.td)
        items.append(_Item(r, 0, True, options))

    for k, level in enumerate(new_by_priority, start=1):
        for r in sorted(level, key=lambda r: r.network_id):
            price_of(costs, r.priority)
            items.append(_Item(r, k, False, _shape_options(dims.F, dims.T, r.f, r.td)))

    search = _Search(items, max(len(new_by_priority), 1), dims.capacity)
    best_value, best_choice = search.run()
    logger.debug(f"Exact search over {len(items)} networks visited {search.nodes} nodes")
    if best_value is None:
        raise InfeasibleError("existing networks cannot all be embedded")

    placements = []
    embedded = []
    deferred = []
    revenue = 0.0
    for it, option in zip(items, best_choice):
        r = it.request
        if option is None:
            deferred.append(r.network_id)
            continue
        placements.append(Placement(r.network_id, option[1], option[2], r.f, r.td))
        revenue += price_of(costs, r.priority) * r.area
        if not it.mandatory:
            embedded.append(r.network_id)

    result = StageResult(
        placements=tuple(placements),
        embedded_ids=tuple(embedded),
        deferred_ids=tuple(deferred),
    )
    return result, revenue


def placement_revenue(result, requests, costs):
    """Sum of p_s * area over the networks placed in result."""
    by_id = {r.network_id: r for r in requests}
    return sum(price_of(costs, by_id[p.network_id].priority) * p.area for p in result.placements)


def stage_areas(result, new_requests, K):
    """
    Area of the NEW networks embedded at each priority stage, indexed by
    priority - 1. The exact search maximizes this vector lexicographically,
    which is the same as maximizing each stage's revenue in turn.
    """
    by_id = {r.network_id: r for r in new_requests}
    stages = [0] * K
    for nid in result.embedded_ids:
        r = by_id[nid]
        stages[r.priority - 1] += r.area
    return tuple(stages)


def verify_stage_result(dims, existing, new_requests, result, static=False):
    """
    Check a StageResult against the embedding constraints without using the
    grid engine. Returns a list of violation messages (empty when valid).
    """
    violations = []
    requests = {r.network_id: r for r in list(existing) + list(new_requests)}
    new_ids = {r.network_id for r in new_requests}
    counts = np.zeros(dims.shape, dtype=np.int64)
    placed = {}

    for p in result.placements:
        r = requests.get(p.network_id)
        if r is None:
            violations.append(f"placement for unknown network {p.network_id}")
            continue
        if p.network_id in placed:
            violations.append(f"network {p.network_id} placed more than once")
            continue
        placed[p.network_id] = p
        if (p.f, p.td) != (r.f, r.td):
            violations.append(
                f"network {p.network_id} placed as {p.f}x{p.td}, requested {r.f}x{r.td}"
            )
        if not p.fits(dims):
            violations.append(f"network {p.network_id} exceeds the substrate")
            continue
        counts[p.rows, p.cols] += 1

    if (counts > 1).any():
        i, j = np.argwhere(counts > 1)[0]
        violations.append(f"block ({i}, {j}) is used by more than one network")

    for r in existing:
        if r.network_id not in placed:
            violations.append(f"existing network {r.network_id} was not embedded")
        elif static and placed[r.network_id] != r.placement:
            violations.append(f"existing network {r.network_id} moved under static embedding")

    embedded = set(result.embedded_ids)
    deferred = set(result.deferred_ids)
    if embedded & deferred:
        violations.append(f"networks both embedded and deferred: {sorted(embedded & deferred)}")
    if embedded | deferred != new_ids:
        violations.append("embedded and deferred ids do not cover the new requests")
    if embedded != {nid for nid in placed if nid in new_ids}:
        violations.append("embedded ids do not match the placed new requests")

    return violations
