"""
`vne-sim oracle-check`: compare the heuristics with the exact staged
optimization on random single-slot instances.
"""
import logging
import re
from dataclasses import dataclass, field

import click
import numpy as np

from vnesim import config
from vnesim.decorators import EXIT_RUNTIME, cli_errors
from vnesim.embedders import (
    EmbedRequest,
    EmbedderMode,
    embed_dynamic_greedy,
    embed_dynamic_km,
    embed_static_km,
    group_by_priority,
    km_placement,
)
from vnesim.errors import ConfigError
from vnesim.grid import OccupancyGrid, SubstrateDims, place
from vnesim.oracle import embed_exact, placement_revenue, stage_areas, verify_stage_result
from vnesim.simulator import PriorityCosts

logger = logging.getLogger(__name__)

MAX_SPAN = 3
MAX_EXISTING = 2
REVENUE_TOLERANCE = 1e-9


def parse_dims(text):
    match = re.fullmatch(r'\s*(\d+)\s*[xX]\s*(\d+)\s*', text)
    if not match:
        raise ConfigError(f"--dims expects FxT, got {text!r}")
    return SubstrateDims(int(match.group(1)), int(match.group(2)))


@dataclass(frozen=True)
class OracleInstance:
    dims: SubstrateDims
    existing: tuple
    new: tuple


def random_instance(rng, dims, max_requests, K):
    """
    0..2 existing networks packed by KM on an empty substrate, then at
    least one new request; at most max_requests networks in total.
    """
    f_hi = min(MAX_SPAN, dims.F)
    td_hi = min(MAX_SPAN, dims.T)
    n_existing = int(rng.integers(0, min(MAX_EXISTING, max_requests - 1), endpoint=True))
    n_new = int(rng.integers(1, max_requests - n_existing, endpoint=True))

    grid = OccupancyGrid.empty(dims)
    existing = []
    next_id = 1
    for _ in range(n_existing):
        p, f, td = (int(v) for v in (rng.integers(1, K, endpoint=True),
                                     rng.integers(1, f_hi, endpoint=True),
                                     rng.integers(1, td_hi, endpoint=True)))
        placement = km_placement(grid, next_id, f, td)
        if placement is None:
            continue
        grid = place(grid, placement)
        existing.append(EmbedRequest(next_id, p, f, td).as_existing(placement))
        next_id += 1

    new = []
    for _ in range(n_new):
        p, f, td = (int(v) for v in (rng.integers(1, K, endpoint=True),
                                     rng.integers(1, f_hi, endpoint=True),
                                     rng.integers(1, td_hi, endpoint=True)))
        new.append(EmbedRequest(next_id, p, f, td, arrival=0))
        next_id += 1
    return OracleInstance(dims, tuple(existing), tuple(new))


@dataclass
class OracleCheckResult:
    instances: int = 0
    violations: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    def mean_ratio(self, name):
        values = self.ratios.get(name, [])
        return float(np.mean(values)) if values else float('nan')

    def revenue_exceedances(self, name):
        """Instances where the heuristic earned more than the area-optimal embedding."""
        return sum(1 for r in self.ratios.get(name, []) if r > 1.0 + REVENUE_TOLERANCE)


def check_instance(instance, costs, cap=None):
    """Violation messages for one instance; also returns heuristic/optimal revenue ratios."""
    dims, existing, new = instance.dims, list(instance.existing), list(instance.new)
    levels = group_by_priority(new, costs.K)
    requests = existing + new
    violations = []
    ratios = {}

    optimum = {}
    for mode in (EmbedderMode.EXACT_STATIC, EmbedderMode.EXACT_DYNAMIC):
        result, revenue = embed_exact(dims, existing, levels, mode, costs.values)
        for v in verify_stage_result(dims, existing, new, result, static=mode.is_static):
            violations.append(f"{mode}: {v}")
        optimum[mode] = (stage_areas(result, new, costs.K), revenue)

    heuristics = (
        ('static-km', EmbedderMode.EXACT_STATIC, embed_static_km(dims, existing, new)),
        ('dynamic-km', EmbedderMode.EXACT_DYNAMIC, embed_dynamic_km(dims, existing, new)),
        ('dynamic-greedy', EmbedderMode.EXACT_DYNAMIC, embed_dynamic_greedy(dims, existing, levels, cap=cap)),
    )
    for name, bound_mode, result in heuristics:
        static = bound_mode.is_static
        for v in verify_stage_result(dims, existing, new, result, static=static):
            violations.append(f"{name}: {v}")
        areas = stage_areas(result, new, costs.K)
        best_areas, best_revenue = optimum[bound_mode]
        if areas > best_areas:
            violations.append(
                f"{name}: embedded area by priority {areas} beats {bound_mode} optimum {best_areas}"
            )
        revenue = placement_revenue(result, requests, costs.values)
        ratios[name] = revenue / best_revenue if best_revenue > 0 else 1.0
    return violations, ratios


def run_oracle_check(instances, dims, seed, max_requests, K, cap=None):
    rng = np.random.Generator(np.random.PCG64(seed))
    costs = PriorityCosts(PriorityCosts().values[:K])
    outcome = OracleCheckResult()
    for n in range(instances):
        instance = random_instance(rng, dims, max_requests, K)
        violations, ratios = check_instance(instance, costs, cap)
        outcome.instances += 1
        for v in violations:
            logger.error(f"instance {n}: {v}")
            outcome.violations.append(f"instance {n}: {v}")
        for name, ratio in ratios.items():
            outcome.ratios.setdefault(name, []).append(ratio)
    return outcome


def register_commands(cli):
    """Register the oracle-check command."""

    @cli.command('oracle-check')
    @click.option('--instances', type=click.IntRange(min=0), default=200, show_default=True)
    @click.option('--dims', 'dims_text', default='6x6', show_default=True, help='Substrate as FxT.')
    @click.option('--seed', type=int, default=lambda: config.DEFAULT_SEED, help='Instance generator seed.')
    @click.option('--max-requests', type=click.IntRange(min=1), default=4, show_default=True,
                  help='Networks per instance, existing included.')
    @click.option('--K', 'K', type=click.IntRange(1, 3), default=2, show_default=True, help='Priority levels.')
    @click.option('--force', is_flag=True, help='Allow instances above the exhaustive-search limits.')
    @cli_errors
    def oracle_check_command(instances, dims_text, seed, max_requests, K, force):
        """Check heuristic dominance and oracle feasibility on random instances."""
        dims = parse_dims(dims_text)
        if not force:
            if dims.capacity > config.ORACLE_MAX_CELLS:
                raise ConfigError(
                    f"{dims} has {dims.capacity} cells, limit is {config.ORACLE_MAX_CELLS} (use --force)"
                )
            if max_requests > config.ORACLE_MAX_REQUESTS:
                raise ConfigError(
                    f"--max-requests {max_requests} exceeds {config.ORACLE_MAX_REQUESTS} (use --force)"
                )

        outcome = run_oracle_check(instances, dims, seed, max_requests, K)

        click.echo(f"{outcome.instances} instance(s) on {dims}, K={K}, seed={seed}")
        for name in ('static-km', 'dynamic-km', 'dynamic-greedy'):
            click.echo(
                f"  {name}: mean revenue ratio to optimum {outcome.mean_ratio(name):.4f}, "
                f"above optimum in {outcome.revenue_exceedances(name)} instance(s)"
            )
        click.echo(f"Violations: {len(outcome.violations)}")
        for v in outcome.violations[:20]:
            click.echo(f"  {v}", err=True)
        if not outcome.ok:
            raise SystemExit(EXIT_RUNTIME)
