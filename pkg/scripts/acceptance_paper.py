#!/usr/bin/env python3
"""
Long acceptance run: the scripted 5x5 example, the default scenario, the
large-request scenario and the oracle dominance harness.

Usage: python scripts/acceptance_paper.py [--workers N] [--out DIR] [--strict]
Exit codes: 0 = success (known deviations are logged as warnings),
1 = failure (or any known deviation with --strict)
"""
import logging
import sys
import time
from pathlib import Path

import click
import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from vnesim import LOG_FORMAT, config  # noqa: E402
from vnesim.commands.oracle_check import run_oracle_check  # noqa: E402
from vnesim.commands.run import load_baseline, run_scenario, write_outputs  # noqa: E402
from vnesim.embedders import EmbedderMode  # noqa: E402
from vnesim.grid import SubstrateDims  # noqa: E402
from vnesim.scenario import load_scenario  # noqa: E402

STATIC, DYNAMIC, GREEDY = EmbedderMode.STATIC_KM, EmbedderMode.DYNAMIC_KM, EmbedderMode.DYNAMIC_GREEDY

logger = logging.getLogger('acceptance')
deviations = []


def log(msg):
    logger.info(msg)


def fail(msg):
    """Log error and exit with failure code."""
    logger.error(msg)
    sys.exit(1)


def check(condition, msg):
    if not condition:
        fail(msg)
    log(f"ok: {msg}")


def known_deviation(condition, msg, measured):
    """
    An expected figure this model does not reproduce (see DESIGN.md).
    Logged as a warning and counted; --strict turns it into a failure.
    """
    if condition:
        log(f"ok: {msg}")
        return
    logger.warning(f"KNOWN DEVIATION: {msg}; measured {measured}")
    deviations.append(f"{msg} (measured {measured})")


def run_preset(name, out_root, workers, **overrides):
    started = time.monotonic()
    overrides['run.out'] = str(out_root / name)
    scenario = load_scenario(preset=name, overrides=overrides)
    baseline_rows, baseline_dir = load_baseline(scenario)
    by_mode = run_scenario(scenario, workers=workers)
    report = write_outputs(scenario, by_mode, baseline_rows, baseline_dir)
    log(f"{name}: {time.monotonic() - started:.1f}s")
    return scenario, by_mode, report


def check_fig1(out_root, workers):
    _, by_mode, _ = run_preset('fig1', out_root, workers)
    static = by_mode[STATIC][0]
    check(static.rejected_ids == (3,), "static KM rejects request 3 in the scripted example")
    check(static.metrics[1].rejected == 1, "the rejection lands in slot 1")
    for mode in (DYNAMIC, GREEDY):
        s = by_mode[mode][0]
        check(s.rejected == 0 and s.accepted == 3, f"{mode} accepts all three requests")


def check_default(out_root, workers):
    scenario, by_mode, report = run_preset('paper-default', out_root, workers)
    paired = report.paired(DYNAMIC, STATIC)
    log(f"dynamic vs static: rejection -{paired.rejection_reduction_pct:.1f}%, "
        f"revenue +{paired.revenue_gain_pct:.1f}%")
    check(45.0 <= paired.rejection_reduction_pct <= 80.0, "dynamic KM rejection reduction within 45..80%")
    check(2.0 <= paired.revenue_gain_pct <= 12.0, "dynamic KM revenue gain within 2..12%")

    greedy = np.mean([s.mean_rejection_rate for s in by_mode[GREEDY]])
    dynamic = np.mean([s.mean_rejection_rate for s in by_mode[DYNAMIC]])
    check(greedy <= dynamic, f"greedy rejection {greedy:.4f} <= dynamic KM {dynamic:.4f}")

    before = {p.relative_to(scenario.out_dir): p.read_bytes() for p in Path(scenario.out_dir).rglob('*.csv')}
    run_preset('paper-default', out_root, workers)
    after = {p.relative_to(scenario.out_dir): p.read_bytes() for p in Path(scenario.out_dir).rglob('*.csv')}
    check(before == after, "re-running paper-default gives byte-identical CSVs")


def check_large(out_root, workers):
    _, _, report = run_preset(
        'paper-large-requests', out_root, workers, **{'report.baseline': str(out_root / 'paper-default')}
    )
    for b in report.baseline:
        if b.mode is not DYNAMIC:
            continue
        log(f"{b.mode}: rejection x{b.rejection_ratio:.2f}, revenue {b.revenue_change_pct:.1f}%, "
            f"priority factors {', '.join(f'{f:.2f}' for f in b.priority_factors)}")
        known_deviation(1.3 <= b.rejection_ratio <= 2.2, "large requests: rejection 1.3..2.2x the default",
                        f"{b.rejection_ratio:.2f}x")
        check(-20.0 <= b.revenue_change_pct <= -6.0, "large requests: revenue 6..20% lower")
        check(b.priority_factors[0] > max(b.priority_factors[1:]),
              "large requests: priority-1 rejection grows the most")
        return
    fail("no dynamic-km baseline comparison in the large-request report")


def check_oracle():
    started = time.monotonic()
    outcome = run_oracle_check(200, SubstrateDims(6, 6), seed=0, max_requests=4, K=2)
    log(f"oracle-check: {time.monotonic() - started:.1f}s")
    check(outcome.ok, f"oracle dominance and feasibility on {outcome.instances} instances")
    for name in ('static-km', 'dynamic-km', 'dynamic-greedy'):
        log(f"{name}: revenue above optimum in {outcome.revenue_exceedances(name)} instance(s)")


@click.command()
@click.option('--workers', type=click.IntRange(min=1), default=1)
@click.option('--out', 'out_dir', default=str(project_root / 'results' / 'acceptance'))
@click.option('--strict', is_flag=True, help='Fail on known deviations too.')
def main(workers, out_dir, strict):
    logging.basicConfig(level=config.LOG_LEVEL, format=LOG_FORMAT)
    out_root = Path(out_dir)

    check_fig1(out_root, workers)
    check_oracle()
    check_default(out_root, workers)
    check_large(out_root, workers)
    if deviations:
        for d in deviations:
            logger.warning(f"known deviation: {d}")
        if strict:
            fail(f"{len(deviations)} known deviation(s) with --strict")
        log(f"Acceptance checks passed with {len(deviations)} known deviation(s)")
        return
    log("All acceptance checks passed")


if __name__ == '__main__':
    main()
