"""
Configuration from environment variables.
"""
import os

# Master seed used when a scenario names no replication seeds
DEFAULT_SEED = int(os.getenv('VNE_SIM_SEED', '0'))

# Where `vne-sim run` writes results unless the scenario or --out says otherwise
OUTPUT_DIR = os.getenv('VNE_SIM_OUT_DIR', 'results')

LOG_LEVEL = os.getenv('VNE_SIM_LOG_LEVEL', 'INFO').upper()

# Greedy embedder: max requests per priority level before falling back to KM ordering
COMBINATION_CAP = int(os.getenv('VNE_SIM_COMBINATION_CAP', '12'))

# Parallel (mode, seed) runs
WORKERS = int(os.getenv('VNE_SIM_WORKERS', '1'))

# oracle-check refuses larger instances unless --force is given
ORACLE_MAX_CELLS = int(os.getenv('VNE_SIM_ORACLE_MAX_CELLS', '36'))
ORACLE_MAX_REQUESTS = int(os.getenv('VNE_SIM_ORACLE_MAX_REQUESTS', '6'))

# Shipped scenario presets (data/presets at project root)
PRESETS_DIR = os.getenv(
    'VNE_SIM_PRESETS_DIR',
    os.path.join(os.path.dirname(__file__), '..', 'data', 'presets'),
)
