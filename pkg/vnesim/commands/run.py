"""
`vne-sim run`: simulate every (mode, seed) of a scenario and write the
per-slot CSVs, the replication CSV and the comparison report.
"""
import logging
from pathlib import Path

import click

from vnesim import config
from vnesim.decorators import cli_errors
from vnesim.errors import ConfigError
from vnesim.reports import (
    build_report,
    read_replication_csv,
    slot_csv_path,
    write_replication_csv,
    write_report,
    write_slot_csv,
)
from vnesim.scenario import load_scenario, parse_overrides, resolve_baseline
from vnesim.simulator import run_many

logger = logging.getLogger(__name__)


def run_scenario(scenario, workers=1):
    """Run all (mode, seed) pairs; returns {mode: [summary per seed]} in scenario order."""
    traces = {seed: scenario.trace_for(seed) for seed in scenario.seeds}
    jobs = [
        (traces[seed], scenario.settings(mode))
        for mode in scenario.modes
        for seed in scenario.seeds
    ]
    logger.info(
        f"Scenario {scenario.name}: {len(scenario.modes)} mode(s) x {len(scenario.seeds)} seed(s) "
        f"on {scenario.dims}, {workers} worker(s)"
    )
    summaries = run_many(jobs, workers=workers)

    by_mode = {mode: [] for mode in scenario.modes}
    for summary in summaries:
        by_mode[summary.mode].append(summary)
    return by_mode


def load_baseline(scenario):
    """(replication rows by mode, source directory), or (None, None) without a baseline."""
    baseline_dir = resolve_baseline(scenario.baseline)
    if baseline_dir is None:
        return None, None
    if baseline_dir.resolve() == Path(scenario.out_dir).resolve():
        raise ConfigError(f"baseline {baseline_dir} is the output directory of this run")
    baseline_file = baseline_dir / 'replications.csv'
    if not baseline_file.is_file():
        raise FileNotFoundError(f"baseline replication summary not found: {baseline_file}")
    return read_replication_csv(baseline_file), baseline_dir


def write_outputs(scenario, by_mode, baseline_rows=None, baseline_dir=None):
    """Single-threaded merge of finished runs into the output directory."""
    out_dir = Path(scenario.out_dir)
    header = scenario.describe()

    for mode, summaries in by_mode.items():
        for summary in summaries:
            write_slot_csv(slot_csv_path(out_dir, mode, summary.seed), summary, header)

    all_summaries = [s for summaries in by_mode.values() for s in summaries]
    write_replication_csv(out_dir / 'replications.csv', all_summaries, header)

    report = build_report(scenario, by_mode, baseline_rows, baseline_dir)
    write_report(out_dir / 'report.txt', report, header)
    return report


def register_commands(cli):
    """Register the run command."""

    @cli.command('run')
    @click.option('--config', 'config_file', type=click.Path(dir_okay=False), help='Scenario file (key = value lines).')
    @click.option('--preset', help='Shipped scenario preset, e.g. paper-default or fig1.')
    @click.option('--seeds', help="Replication seeds: 'a,b,c' or 'a..b'.")
    @click.option('--modes', help='Comma-separated embedder modes.')
    @click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Output directory.')
    @click.option('--baseline', help='Earlier run directory (or scenario name) to compare against.')
    @click.option('--set', 'assignments', multiple=True, metavar='KEY=VALUE', help='Override a scenario key.')
    @click.option('--workers', type=click.IntRange(min=1), default=lambda: config.WORKERS,
                  help='Parallel (mode, seed) runs.')
    @cli_errors
    def run_command(config_file, preset, seeds, modes, out_dir, baseline, assignments, workers):
        """Run a scenario and write CSVs plus a comparison report."""
        if config_file and preset:
            raise ConfigError("use either --config or --preset, not both")

        overrides = parse_overrides(assignments)
        for key, value in (('run.seeds', seeds), ('run.modes', modes),
                           ('run.out', out_dir), ('report.baseline', baseline)):
            if value is not None:
                overrides[key] = value

        scenario = load_scenario(path=config_file, preset=preset, overrides=overrides)
        baseline_rows, baseline_dir = load_baseline(scenario)
        by_mode = run_scenario(scenario, workers=workers)
        report = write_outputs(scenario, by_mode, baseline_rows, baseline_dir)

        click.echo(report.render(), nl=False)
        click.echo(f"Results written to {scenario.out_dir}")
