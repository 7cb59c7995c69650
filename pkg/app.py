import logging
import os

import click
from mongoengine.errors import ValidationError

# Import configuration
from config import config

# Import commands
from cli.common import RunContext
from cli.data import synth, project
from cli.training import train, translate
from cli.evaluation import evaluate, report
from utils.errors import ConfigError, Oct2ConfocalError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']


def configure_logging(level='INFO'):
    """Route every package logger to stderr at the given level."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_oct2conf', False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._oct2conf = True
    root.addHandler(handler)
    root.setLevel(level.upper())


class CommandGroup(click.Group):
    """Turns domain errors into `error[<kind>]: <message>` and their exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except Oct2ConfocalError as e:
            self._fail(ctx, e)
        except ValidationError as e:
            self._fail(ctx, ConfigError(str(e)))

    @staticmethod
    def _fail(ctx, error):
        logger.debug('Command failed', exc_info=error)
        click.echo(f"error[{error.kind}]: {error}", err=True)
        ctx.exit(error.exit_code)


def create_app(config_name='default'):
    """Application factory function: the command-line group with every command registered."""
    settings = config[config_name]

    @click.group(cls=CommandGroup, context_settings={'help_option_names': ['-h', '--help']})
    @click.version_option(settings.VERSION, prog_name='oct2confocal')
    @click.option('--seed', type=int, help='Overrides the seed of the run config.')
    @click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Run config JSON.')
    @click.option('--force', is_flag=True, help='Overwrite existing outputs.')
    @click.option('--workers', type=click.IntRange(min=0), help='Data loader worker processes.')
    @click.option('--log-level', type=click.Choice(LOG_LEVELS, case_sensitive=False), default=settings.LOG_LEVEL,
                  show_default=True)
    @click.pass_context
    def app(ctx, seed, config_path, force, workers, log_level):
        """Unpaired OCT <-> confocal volume translation."""
        configure_logging(log_level)
        ctx.obj = RunContext(settings, seed=seed, config_path=config_path, force=force, workers=workers)

    # Register commands
    app.add_command(synth)
    app.add_command(train)
    app.add_command(translate)
    app.add_command(project)
    app.add_command(evaluate)
    app.add_command(report)
    return app


if __name__ == '__main__':
    create_app(os.environ.get('OCT2CONF_ENV', 'default'))()
