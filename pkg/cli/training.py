import logging
import os

import click

from cli.common import pass_run, recorded_run
from config import load_run_config, resolve_device
from datapipe import UnpairedDataset
from trainer import CheckpointBundle, train as run_training, translate as run_translation, DIRECTIONS
from utils.errors import DataError
from utils.storage import prepare_output_dir, write_json_atomic, get_file_size_mb
from volume_core import Domain, load_volume, save_volume, project_fundus, save_projection

logger = logging.getLogger(__name__)

RUN_CONFIG_NAME = 'config.json'
INPUT_DOMAINS = {'x2y': Domain.OCT_LIKE, 'y2x': Domain.CONFOCAL_LIKE}


@click.command('train')
@click.option('--data-root', type=click.Path(file_okay=False), help='Dataset root holding trainX/ and trainY/.')
@click.option('--run-dir', type=click.Path(file_okay=False), help='Where checkpoints and logs go.')
@click.option('--resume', 'resume_path', type=click.Path(exists=True, dir_okay=False),
              help='Continue from a checkpoint bundle.')
@click.option('--epochs', type=click.IntRange(min=0), help='Epochs over the X domain.')
@click.option('--max-iterations', type=click.IntRange(min=0), help='Iteration cap; overrides --epochs.')
@click.option('--variant', help='Label stored with the run (e.g. an ablation name).')
@pass_run
def train(run, data_root, run_dir, resume_path, epochs, max_iterations, variant):
    """Train both generators and discriminators of the cycle."""
    settings = run.settings
    resume = CheckpointBundle.load(resume_path) if resume_path else None
    cfg = load_run_config(run.config_path, base=resume.config.to_dict() if resume else None, overrides={
        'seed': run.seed,
        'workers': run.workers,
        'data_root': data_root,
        'run_dir': run_dir,
        'epochs': epochs,
        'max_iterations': max_iterations,
        'variant': variant,
    })
    data_root = cfg.data_root or settings.DATA_ROOT
    run_dir = cfg.run_dir or os.path.join(settings.RUNS_DIR, cfg.variant or 'default')
    if resume is None:
        prepare_output_dir(run_dir, run.force)
    else:
        os.makedirs(run_dir, exist_ok=True)

    dataset = UnpairedDataset.from_root(data_root, 'train')
    dataset.check_trainable()
    config_path = write_json_atomic(os.path.join(run_dir, RUN_CONFIG_NAME), cfg.to_dict())

    inputs = [data_root] + ([resume_path] if resume_path else [])
    with recorded_run(run, 'train', run_dir, config=cfg.to_dict(), inputs=inputs) as manifest:
        bundle = run_training(cfg, dataset, run_dir=run_dir, resume=resume, device=resolve_device(settings),
                              workers=cfg.workers, progress=settings.PROGRESS_BAR,
                              deterministic=settings.DETERMINISTIC)
        checkpoint = os.path.join(run_dir, settings.CHECKPOINT_NAME)
        manifest.outputs.extend([checkpoint, os.path.join(run_dir, settings.TRAIN_LOG_NAME), config_path])
        logger.info(f"Checkpoint at iteration {bundle.iteration}: {checkpoint} "
                    f"({get_file_size_mb(checkpoint):.1f} MB)")
    click.echo(f"Trained to iteration {bundle.iteration}; checkpoint at {checkpoint}")


@click.command('translate')
@click.argument('checkpoint', type=click.Path(exists=True, dir_okay=False))
@click.argument('volume_path', type=click.Path(exists=True))
@click.argument('out_dir', type=click.Path(file_okay=False))
@click.option('--direction', type=click.Choice(sorted(DIRECTIONS)), default='x2y', show_default=True,
              help='x2y maps OCT-like to confocal-like, y2x the reverse.')
@click.option('--pad-to-multiple', is_flag=True,
              help='Reflect-pad H and W to the generator divisor and crop the result back.')
@click.option('--projection-mode', type=click.Choice(['mean', 'max']), default='mean', show_default=True)
@pass_run
def translate(run, checkpoint, volume_path, out_dir, direction, pad_to_multiple, projection_mode):
    """Translate one volume with a trained generator; writes slices and a projection."""
    bundle = CheckpointBundle.load(checkpoint)
    volume = load_volume(volume_path)
    if volume.domain is not INPUT_DOMAINS[direction]:
        raise DataError(f"{volume_path} is {volume.domain.name}, direction {direction} expects "
                        f"{INPUT_DOMAINS[direction].name}")
    prepare_output_dir(out_dir, run.force)

    config = {'direction': direction, 'pad_to_multiple': pad_to_multiple, 'projection_mode': projection_mode,
              'iteration': bundle.iteration}
    with recorded_run(run, 'translate', out_dir, config=config, inputs=[checkpoint, volume_path]) as manifest:
        translated = run_translation(bundle, volume, direction, pad_to_multiple=pad_to_multiple,
                                     device=resolve_device(run.settings))
        slices_dir = save_volume(translated, os.path.join(out_dir, 'slices'))
        projection = save_projection(project_fundus(translated, projection_mode),
                                     os.path.join(out_dir, run.settings.PROJECTION_NAME))
        manifest.outputs.extend([slices_dir, projection])
    click.echo(f"Translated volume written to {out_dir}")
