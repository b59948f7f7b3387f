"""
Command decorators mapping failures to exit codes.
"""
import logging
import sys
from functools import wraps

import click

from vnesim.errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def cli_errors(f):
    """
    Configuration problems and missing inputs exit 2 with a message on
    stderr; anything else is logged and exits 1.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except (ConfigError, ParseError, FileNotFoundError) as e:
            logger.error(f"{f.__name__}: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except Exception as e:
            logger.exception(f"{f.__name__} failed")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_RUNTIME)
    return decorated_function
