import logging
import os
from contextlib import contextmanager

import click
import numpy as np

from config import Config
from models import RunManifest
from utils.errors import ConfigError, DataError
from utils.storage import file_sha256, write_json_atomic

logger = logging.getLogger(__name__)


class RunContext:
    """Global flags shared by every command."""

    def __init__(self, settings, seed=None, config_path=None, force=False, workers=None):
        self.settings = settings
        self.seed = seed
        self.config_path = config_path
        self.force = force
        # None leaves the run config value in place
        self.workers = workers if workers is not None else (settings.NUM_WORKERS or None)


pass_run = click.make_pass_decorator(RunContext)


def derive_seed(*parts):
    """Stable 31-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0] & 0x7FFFFFFF)


def parse_dims(text):
    try:
        dims = tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise ConfigError(f"--dims expects comma-separated integers, got {text!r}")
    if not dims:
        raise ConfigError('--dims needs at least one dimension')
    return dims


def manifest_path_for(output):
    """Manifest inside an output directory, or next to an output file."""
    if os.path.isdir(output):
        return os.path.join(output, Config.MANIFEST_NAME)
    return f"{output}.{Config.MANIFEST_NAME}"


def ensure_free_file(path, force):
    if os.path.exists(path) and not force:
        raise DataError(f"{path} already exists (use --force to overwrite)")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


@contextmanager
def recorded_run(run, command, output, config=None, inputs=()):
    """Yield a RunManifest and write it next to `output` when the command ends, failed or not."""
    manifest = RunManifest(command=command, config=config or {}, seed=run.seed,
                           tool_version=Config.VERSION)
    for path in inputs:
        if path and os.path.exists(path):
            manifest.add_input(path, file_sha256(path))
    try:
        yield manifest
    except Exception:
        manifest.mark_failed()
        if os.path.exists(output):
            write_json_atomic(manifest_path_for(output), manifest.to_dict())
        raise
    manifest.mark_completed(manifest.outputs)
    path = manifest_path_for(output)
    write_json_atomic(path, manifest.to_dict())
    logger.info(f"{command} finished in {manifest.duration_seconds:.1f}s; manifest at {path}")
