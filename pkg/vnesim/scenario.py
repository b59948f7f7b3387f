"""
Scenario configuration: flat dotted key-value files, presets and overrides.

Files use `key = value` lines with `#` comments and are read with
python-dotenv. Every key has a default (the paper-default setup); a file
overrides the defaults and --set / CLI flags override the file.
"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from dotenv import dotenv_values

from vnesim import config
from vnesim.embedders import EmbedderMode
from vnesim.errors import ConfigError, ParseError
from vnesim.grid import SubstrateDims
from vnesim.simulator import PriorityCosts, SimulationSettings
from vnesim.traffic import TrafficConfig, generate_trace, load_trace

logger = logging.getLogger(__name__)

DEFAULTS = {
    'scenario.name': 'custom',
    'substrate.F': '12',
    'substrate.T': '12',
    'traffic.lambda': '3.0',
    'traffic.mu': '10.0',
    'traffic.K': '3',
    'traffic.f_min': '1',
    'traffic.f_max': '3',
    'traffic.td_min': '1',
    'traffic.td_max': '3',
    'traffic.horizon': '1000',
    'traffic.trace': '',
    'costs.p1': '0.5',
    'costs.p2': '0.3',
    'costs.p3': '0.2',
    'delay.p1': '1',
    'delay.p2': '2',
    'delay.p3': '3',
    'run.modes': 'static-km,dynamic-km,dynamic-greedy',
    'run.seeds': '',
    'run.replications': '20',
    'run.out': '',
    'embedder.combination_cap': '',
    'report.baseline': '',
}

_PER_PRIORITY_KEY = re.compile(r'^(costs|delay)\.p([1-9][0-9]*)$')


def _check_keys(values, origin):
    for key in values:
        if key not in DEFAULTS and not _PER_PRIORITY_KEY.match(key):
            raise ConfigError(f"unknown configuration key {key!r} in {origin}")


def _int(values, key):
    try:
        return int(values[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from None


def _float(values, key):
    try:
        return float(values[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None


def parse_seeds(text):
    """'1,2,3' or '1..20' (inclusive)."""
    text = text.strip()
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            seeds = tuple(range(int(lo), int(hi) + 1))
        else:
            seeds = tuple(int(s) for s in text.split(',') if s.strip())
    except ValueError:
        raise ConfigError(f"run.seeds must be 'a,b,c' or 'a..b', got {text!r}") from None
    if not seeds:
        raise ConfigError(f"run.seeds selects no seed: {text!r}")
    return seeds


def parse_modes(text):
    modes = tuple(EmbedderMode.parse(m) for m in text.split(',') if m.strip())
    if not modes:
        raise ConfigError("run.modes selects no embedder mode")
    return modes


def preset_names():
    presets_dir = Path(config.PRESETS_DIR)
    if not presets_dir.is_dir():
        return []
    return sorted(p.stem for p in presets_dir.glob('*.conf'))


def preset_path(name):
    path = Path(config.PRESETS_DIR) / f"{name}.conf"
    if not path.is_file():
        available = ', '.join(preset_names()) or 'none'
        raise ConfigError(f"unknown preset {name!r} (available: {available})")
    return path


def parse_overrides(pairs):
    """['key=value', ...] from repeated --set flags."""
    overrides = {}
    for pair in pairs:
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        overrides[key.strip()] = value.strip()
    return overrides


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    traffic: TrafficConfig
    costs: PriorityCosts
    max_delays: tuple
    modes: tuple
    seeds: tuple
    out_dir: Path
    trace_file: Path = None
    combination_cap: int = None
    baseline: str = ''
    resolved: tuple = ()

    @property
    def dims(self):
        return self.traffic.dims

    @property
    def scripted(self):
        return self.trace_file is not None

    def settings(self, mode):
        return SimulationSettings(
            dims=self.dims,
            mode=mode,
            costs=self.costs,
            max_delays=self.max_delays,
            combination_cap=self.combination_cap,
        )

    def trace_for(self, seed):
        if self.trace_file is not None:
            return load_trace(self.trace_file)
        return generate_trace(self.traffic.with_seed(seed))

    def describe(self):
        """Resolved configuration as 'key = value' lines (sorted)."""
        return [f"{key} = {value}" for key, value in self.resolved]


def load_scenario(path=None, preset=None, overrides=None, master_seed=None):
    """
    Resolve defaults <- preset or config file <- overrides into a validated
    ScenarioConfig.
    """
    values = dict(DEFAULTS)
    base_dir = Path.cwd()
    origin = 'defaults'

    if preset is not None:
        path = preset_path(preset)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file not found: {path}")
        file_values = dotenv_values(path, interpolate=False)
        missing = [k for k, v in file_values.items() if v is None]
        if missing:
            raise ConfigError(f"keys without a value in {path}: {', '.join(missing)}")
        _check_keys(file_values, path)
        values.update(file_values)
        base_dir = path.parent
        origin = str(path)

    if overrides:
        _check_keys(overrides, 'command-line overrides')
        values.update(overrides)

    name = values['scenario.name'].strip() or 'custom'
    trace_file = None
    if values['traffic.trace'].strip():
        trace_file = (base_dir / values['traffic.trace'].strip()).resolve()

    if trace_file is not None:
        # A scripted trace fixes the substrate, K and horizon
        try:
            trace = load_trace(trace_file)
        except (OSError, ParseError) as e:
            raise ConfigError(f"cannot load traffic.trace {trace_file}: {e}") from e
        traffic = trace.config
        values['substrate.F'] = str(traffic.dims.F)
        values['substrate.T'] = str(traffic.dims.T)
        values['traffic.K'] = str(traffic.K)
        values['traffic.horizon'] = str(traffic.horizon)
    else:
        dims = SubstrateDims(_int(values, 'substrate.F'), _int(values, 'substrate.T'))
        traffic = TrafficConfig(
            dims=dims,
            lam=_float(values, 'traffic.lambda'),
            mu=_float(values, 'traffic.mu'),
            K=_int(values, 'traffic.K'),
            f_range=(_int(values, 'traffic.f_min'), _int(values, 'traffic.f_max')),
            td_range=(_int(values, 'traffic.td_min'), _int(values, 'traffic.td_max')),
            horizon=_int(values, 'traffic.horizon'),
        )

    K = traffic.K
    for key in values:
        match = _PER_PRIORITY_KEY.match(key)
        if match and int(match.group(2)) > K and key not in DEFAULTS:
            raise ConfigError(f"{key} is set but traffic.K is {K}")
    for k in range(1, K + 1):
        for prefix in ('costs', 'delay'):
            if f"{prefix}.p{k}" not in values:
                raise ConfigError(f"{prefix}.p{k} is required when traffic.K is {K}")
    costs = PriorityCosts(tuple(_float(values, f"costs.p{k}") for k in range(1, K + 1)))
    max_delays = tuple(_int(values, f"delay.p{k}") for k in range(1, K + 1))

    modes = parse_modes(values['run.modes'])
    if trace_file is not None:
        seeds = (traffic.seed,)
        values['run.seeds'] = str(traffic.seed)
    elif values['run.seeds'].strip():
        seeds = parse_seeds(values['run.seeds'])
    else:
        master = config.DEFAULT_SEED if master_seed is None else master_seed
        replications = _int(values, 'run.replications')
        if replications < 1:
            raise ConfigError(f"run.replications must be >= 1, got {replications}")
        seeds = tuple(master + i for i in range(replications))
        values['run.seeds'] = f"{seeds[0]}..{seeds[-1]}"

    cap = None
    if values['embedder.combination_cap'].strip():
        cap = _int(values, 'embedder.combination_cap')
        if cap < 0:
            raise ConfigError(f"embedder.combination_cap must be >= 0, got {cap}")

    out = values['run.out'].strip()
    out_dir = Path(out) if out else Path(config.OUTPUT_DIR) / name
    values['run.out'] = str(out_dir)

    shown = {
        key: value for key, value in values.items()
        if not ((m := _PER_PRIORITY_KEY.match(key)) and int(m.group(2)) > K)
    }
    logger.debug(f"Scenario {name!r} resolved from {origin}")
    return ScenarioConfig(
        name=name,
        traffic=traffic,
        costs=costs,
        max_delays=max_delays,
        modes=modes,
        seeds=seeds,
        out_dir=out_dir,
        trace_file=trace_file,
        combination_cap=cap,
        baseline=values['report.baseline'].strip(),
        resolved=tuple(sorted(shown.items())),
    )


def resolve_baseline(baseline):
    """A baseline is a run directory, or a scenario name under the output root."""
    if not baseline:
        return None
    path = Path(baseline)
    if path.is_dir():
        return path
    return Path(config.OUTPUT_DIR) / baseline
