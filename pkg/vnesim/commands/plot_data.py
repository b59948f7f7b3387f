"""
`vne-sim plot-data`: running-mean series from a run directory.
"""
import click

from vnesim.decorators import cli_errors
from vnesim.reports import emit_plot_data


def register_commands(cli):
    """Register the plot-data command."""

    @cli.command('plot-data')
    @click.option('--in', 'in_dir', required=True, type=click.Path(file_okay=False),
                  help='Run directory holding <mode>/seed-<s>.csv files.')
    @click.option('--out', 'out_dir', type=click.Path(file_okay=False),
                  help='Where to write the series (default: <in>/plot-data).')
    @cli_errors
    def plot_data_command(in_dir, out_dir):
        """Write slot,running_mean series per mode for revenue and rejection rate."""
        for path in emit_plot_data(in_dir, out_dir):
            click.echo(str(path))
