"""
vnesim - prioritized wireless virtual network embedding simulator.
Flat command registration: each module in vnesim.commands adds its verbs.
"""
import logging

# Load .env BEFORE importing any module that reads vnesim.config
try:
    from dotenv import load_dotenv, find_dotenv

    dotenv_path = find_dotenv(usecwd=True)
    if dotenv_path:
        load_dotenv(dotenv_path, override=False)
except ImportError:
    pass  # python-dotenv not installed, environment variables only

import click

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def create_cli():
    """Create the `vne-sim` command group."""
    from vnesim import config

    @click.group(context_settings={'help_option_names': ['-h', '--help']})
    @click.option(
        '--log-level',
        default=lambda: config.LOG_LEVEL,
        type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
        help='Logging level (default: $VNE_SIM_LOG_LEVEL or INFO).',
    )
    def cli(log_level):
        """Simulate prioritized virtual network embedding on a frequency x time grid."""
        logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, force=True)

    # Register all commands (imported here so config sees the loaded .env)
    from vnesim.commands import run, oracle_check, plot_data
    run.register_commands(cli)
    oracle_check.register_commands(cli)
    plot_data.register_commands(cli)

    return cli
