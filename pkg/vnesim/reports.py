"""
Result files: per-slot CSVs, replication CSVs, the comparison report and
plot-data series.

Every file starts with '# key = value' comment lines echoing the resolved
configuration and seed. Floats are written with repr() so identical runs
give byte-identical files.
"""
import csv
import logging
import math
from dataclasses import dataclass
from io import StringIO
from pathlib import Path

import numpy as np

from vnesim.embedders import EmbedderMode
from vnesim.errors import ParseError
from vnesim.simulator import aggregate, running_mean, standard_error

logger = logging.getLogger(__name__)

SLOT_COLUMNS = [
    'slot', 'revenue', 'rejection_rate', 'accepted', 'rejected',
    'deferred', 'occupancy', 'reembed_failures',
]
REPLICATION_COLUMNS = [
    'seed', 'mode', 'mean_revenue', 'mean_rejection_rate', 'total_revenue',
    'requests', 'accepted', 'rejected', 'reembed_failures',
]
PLOT_METRICS = ('revenue', 'rejection_rate')


def _fmt(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return '' if math.isnan(value) else repr(value)
    return str(value)


def _write(path, header_lines, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = StringIO()
    for line in header_lines:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerows(rows)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(buffer.getvalue())


def _read(path, expected_header):
    """(comment key/values, data rows as dicts); header must start with expected_header."""
    path = Path(path)
    meta = {}
    data_lines = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            if line.startswith('#'):
                key, sep, value = line[1:].partition('=')
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            data_lines.append((line_no, line))

    if not data_lines:
        raise ParseError(f"{path}: no CSV header row")
    header_line, header_text = data_lines[0]
    header = next(csv.reader([header_text]))
    if header[:len(expected_header)] != expected_header:
        raise ParseError(f"{path}: CSV header must start with {','.join(expected_header)}", header_line)

    rows = []
    for line_no, text in data_lines[1:]:
        if not text.strip():
            continue
        row = next(csv.reader([text]))
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", line_no)
        rows.append(dict(zip(header, row)))
    return meta, rows


def _float_or_none(text):
    return float(text) if text != '' else None


def slot_csv_path(out_dir, mode, seed):
    return Path(out_dir) / str(mode) / f"seed-{seed}.csv"


def write_slot_csv(path, summary, header_lines):
    rows = [SLOT_COLUMNS]
    for m in summary.metrics:
        rows.append([
            m.slot, _fmt(m.revenue), _fmt(m.rejection_rate), m.accepted, m.rejected,
            m.deferred, _fmt(m.occupancy), m.reembed_failures,
        ])
    header = ['vne-sim per-slot metrics', f"mode = {summary.mode}", f"seed = {summary.seed}"]
    _write(path, header + list(header_lines), rows)


def _load_slot_csv(path):
    meta, rows = _read(path, SLOT_COLUMNS)
    series = {column: [] for column in SLOT_COLUMNS}
    try:
        for row in rows:
            series['slot'].append(int(row['slot']))
            series['revenue'].append(float(row['revenue']))
            series['rejection_rate'].append(_float_or_none(row['rejection_rate']))
            for column in ('accepted', 'rejected', 'deferred', 'reembed_failures'):
                series[column].append(int(row[column]))
            series['occupancy'].append(float(row['occupancy']))
    except ValueError as e:
        raise ParseError(f"{path}: {e}") from e
    return meta, series


def read_slot_csv(path):
    """(mode or None, seed or None, {'slot': [...], 'revenue': [...], ...})."""
    meta, series = _load_slot_csv(path)
    mode = EmbedderMode.parse(meta['mode']) if 'mode' in meta else None
    seed = int(meta['seed']) if 'seed' in meta else None
    return mode, seed, series


def write_replication_csv(path, summaries, header_lines):
    K = max((len(s.priority_rejection) for s in summaries), default=0)
    rows = [REPLICATION_COLUMNS + [f"rejection_p{k}" for k in range(1, K + 1)]]
    for s in summaries:
        rows.append([
            s.seed, str(s.mode), _fmt(s.mean_revenue), _fmt(s.mean_rejection_rate),
            _fmt(s.total_revenue), s.requests, s.accepted, s.rejected, s.reembed_failures,
        ] + [_fmt(v) for v in s.priority_rejection])
    _write(path, ['vne-sim replication summary'] + list(header_lines), rows)


def read_replication_csv(path):
    """Rows grouped by mode: {mode: [{'mean_revenue': .., 'mean_rejection_rate': .., 'priority': (..)}]}."""
    _, rows = _read(path, REPLICATION_COLUMNS)
    grouped = {}
    for row in rows:
        priority_keys = sorted(
            (k for k in row if k.startswith('rejection_p')), key=lambda k: int(k[len('rejection_p'):])
        )
        record = {
            'seed': int(row['seed']),
            'mean_revenue': float(row['mean_revenue']),
            'mean_rejection_rate': _float_or_none(row['mean_rejection_rate']),
            'priority': tuple(_float_or_none(row[k]) for k in priority_keys),
        }
        grouped.setdefault(EmbedderMode.parse(row['mode']), []).append(record)
    return grouped


@dataclass(frozen=True)
class PairedComparison:
    mode: EmbedderMode
    reference: EmbedderMode
    seeds: int
    rejection_reduction_pct: float
    rejection_reduction_se: float
    revenue_gain_pct: float
    revenue_gain_se: float


@dataclass(frozen=True)
class BaselineComparison:
    mode: EmbedderMode
    rejection_ratio: float
    revenue_change_pct: float
    priority_factors: tuple


@dataclass(frozen=True)
class ComparisonReport:
    scenario: str
    description: str
    aggregates: tuple
    pairwise: tuple
    baseline_source: str = ''
    baseline: tuple = ()
    outcomes: tuple = ()

    def aggregate_for(self, mode):
        for a in self.aggregates:
            if a.mode is mode:
                return a
        return None

    def paired(self, mode, reference):
        for p in self.pairwise:
            if p.mode is mode and p.reference is reference:
                return p
        return None

    def render(self):
        lines = [f"Scenario {self.scenario}: {self.description}", '']
        K = max((len(a.priority_rejection) for a in self.aggregates), default=0)
        priority_header = ''.join(f"  {'p' + str(k) + ' rejection':>16}" for k in range(1, K + 1))
        lines.append(f"{'mode':<16}{'revenue':>12}{'(SE)':>10}{'rejection':>12}{'(SE)':>10}{priority_header}")
        for a in self.aggregates:
            priorities = ''.join(
                f"  {_num(v):>8} ({_num(se)})" for v, se in zip(a.priority_rejection, a.priority_rejection_se)
            )
            lines.append(
                f"{str(a.mode):<16}{_num(a.mean_revenue):>12}{_num(a.se_revenue):>10}"
                f"{_num(a.mean_rejection):>12}{_num(a.se_rejection):>10}{priorities}"
            )

        if self.pairwise:
            lines += ['', 'Paired comparison (per seed, then averaged):']
            for p in self.pairwise:
                lines.append(
                    f"  {p.mode} vs {p.reference}: rejection {_pct(p.rejection_reduction_pct)} lower "
                    f"(SE {_num(p.rejection_reduction_se, 2)}), revenue {_pct(p.revenue_gain_pct)} higher "
                    f"(SE {_num(p.revenue_gain_se, 2)}) over {p.seeds} seeds"
                )

        if self.baseline:
            lines += ['', f"Against baseline {self.baseline_source}:"]
            for b in self.baseline:
                factors = ' '.join(f"p{k}={_num(f, 2)}x" for k, f in enumerate(b.priority_factors, start=1))
                lines.append(
                    f"  {b.mode}: rejection {_num(b.rejection_ratio, 2)}x, "
                    f"revenue {_pct(b.revenue_change_pct)} change, priority factors {factors}"
                )

        if self.outcomes:
            lines += ['', 'Request outcomes:']
            lines += [f"  {line}" for line in self.outcomes]

        return '\n'.join(lines) + '\n'


def _num(value, digits=4):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return 'n/a'
    return f"{value:.{digits}f}"


def _pct(value):
    return 'n/a' if value is None or math.isnan(value) else f"{value:.1f}%"


def _mean_of(values):
    values = [v for v in values if v is not None and not math.isnan(v)]
    return float(np.mean(values)) if values else float('nan')


def paired_comparison(mode_summaries, reference_summaries):
    """Percent differences computed seed by seed, then averaged."""
    reference = {s.seed: s for s in reference_summaries}
    reductions = []
    gains = []
    seeds = 0
    for s in mode_summaries:
        ref = reference.get(s.seed)
        if ref is None:
            continue
        seeds += 1
        if ref.mean_rejection_rate > 0 and not math.isnan(s.mean_rejection_rate):
            reductions.append(100.0 * (ref.mean_rejection_rate - s.mean_rejection_rate) / ref.mean_rejection_rate)
        if ref.mean_revenue > 0:
            gains.append(100.0 * (s.mean_revenue - ref.mean_revenue) / ref.mean_revenue)
    return PairedComparison(
        mode=mode_summaries[0].mode,
        reference=reference_summaries[0].mode,
        seeds=seeds,
        rejection_reduction_pct=_mean_of(reductions),
        rejection_reduction_se=standard_error(reductions),
        revenue_gain_pct=_mean_of(gains),
        revenue_gain_se=standard_error(gains),
    )


def baseline_comparison(aggregates, baseline_rows):
    comparisons = []
    for a in aggregates:
        rows = baseline_rows.get(a.mode)
        if not rows:
            continue
        base_rejection = _mean_of([r['mean_rejection_rate'] for r in rows])
        base_revenue = _mean_of([r['mean_revenue'] for r in rows])
        factors = []
        for k, current in enumerate(a.priority_rejection):
            base = _mean_of([r['priority'][k] for r in rows if k < len(r['priority'])])
            factors.append(current / base if base and not math.isnan(base) else float('nan'))
        comparisons.append(BaselineComparison(
            mode=a.mode,
            rejection_ratio=a.mean_rejection / base_rejection if base_rejection else float('nan'),
            revenue_change_pct=100.0 * (a.mean_revenue - base_revenue) / base_revenue if base_revenue else float('nan'),
            priority_factors=tuple(factors),
        ))
    return tuple(comparisons)


def request_outcomes(summaries_by_mode):
    """One line per mode listing accepted and rejected request ids (scripted traces)."""
    lines = []
    for mode, summaries in summaries_by_mode.items():
        for s in summaries:
            rejected = sorted(s.rejected_ids)
            listed = ', '.join(str(r) for r in rejected) or 'none'
            lines.append(f"{mode}: {s.accepted} accepted, {s.rejected} rejected (rejected ids: {listed})")
    return tuple(lines)


def build_report(scenario, summaries_by_mode, baseline_rows=None, baseline_source=''):
    """summaries_by_mode: {EmbedderMode: [SimulationSummary, ...]} in run order."""
    aggregates = tuple(aggregate(s) for s in summaries_by_mode.values())

    pairwise = []
    static = summaries_by_mode.get(EmbedderMode.STATIC_KM)
    if static:
        for mode, summaries in summaries_by_mode.items():
            if mode is not EmbedderMode.STATIC_KM and not mode.is_static:
                pairwise.append(paired_comparison(summaries, static))
    dynamic = summaries_by_mode.get(EmbedderMode.DYNAMIC_KM)
    greedy = summaries_by_mode.get(EmbedderMode.DYNAMIC_GREEDY)
    if dynamic and greedy:
        pairwise.append(paired_comparison(greedy, dynamic))

    description = (
        f"{scenario.dims} substrate, K={scenario.traffic.K}, "
        f"{len(scenario.seeds)} seed(s), modes {', '.join(str(m) for m in scenario.modes)}"
    )
    return ComparisonReport(
        scenario=scenario.name,
        description=description,
        aggregates=aggregates,
        pairwise=tuple(pairwise),
        baseline_source=str(baseline_source) if baseline_rows else '',
        baseline=baseline_comparison(aggregates, baseline_rows) if baseline_rows else (),
        outcomes=request_outcomes(summaries_by_mode) if scenario.scripted else (),
    )


def write_report(path, report, header_lines):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = ''.join(f"# {line}\n" for line in header_lines) + report.render()
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def _column_means(rows):
    """Per-slot mean over seeds of possibly ragged series with None gaps."""
    length = max(len(r) for r in rows)
    sums = np.zeros(length)
    counts = np.zeros(length)
    for r in rows:
        for t, v in enumerate(r):
            if v is not None:
                sums[t] += v
                counts[t] += 1
    return [sums[t] / counts[t] if counts[t] else None for t in range(length)]


def emit_plot_data(in_dir, out_dir=None):
    """
    Two-column (slot, running mean) series per mode and metric, averaging
    the seeds of each mode slot by slot. The header repeats the seed list and
    the configuration echoed by the first per-slot file of the mode.
    Returns the written paths.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir) if out_dir is not None else in_dir / 'plot-data'
    by_mode = {}
    settings = {}
    for path in sorted(in_dir.glob('*/seed-*.csv')):
        meta, series = _load_slot_csv(path)
        if 'mode' not in meta or 'seed' not in meta:
            raise ParseError(f"{path}: missing '# mode = ...' or '# seed = ...' header")
        mode = EmbedderMode.parse(meta.pop('mode'))
        try:
            seed = int(meta.pop('seed'))
        except ValueError as e:
            raise ParseError(f"{path}: {e}") from e
        by_mode.setdefault(mode, []).append((seed, series))
        settings.setdefault(mode, [f"{key} = {value}" for key, value in meta.items()])
    if not by_mode:
        raise FileNotFoundError(f"no per-slot summaries (<mode>/seed-*.csv) under {in_dir}")

    written = []
    for mode in sorted(by_mode, key=lambda m: m.value):
        seeds = sorted(seed for seed, _ in by_mode[mode])
        runs = [series for _, series in by_mode[mode]]
        header = [f"mode = {mode}", f"seeds = {','.join(str(s) for s in seeds)}"] + settings[mode]
        for metric in PLOT_METRICS:
            means = running_mean(_column_means([r[metric] for r in runs]))
            rows = [['slot', 'running_mean']]
            rows += [[t, _fmt(float(v))] for t, v in enumerate(means)]
            path = out_dir / f"{mode}-{metric}.csv"
            _write(path, [f"running mean of {metric}"] + header, rows)
            written.append(path)
    logger.info(f"Wrote {len(written)} plot-data series to {out_dir}")
    return written
