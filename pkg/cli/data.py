import logging
import os

import click

from cli.common import pass_run, derive_seed, ensure_free_file, recorded_run
from config import load_run_config
from datapipe import generate_phantom_pair
from models import PhantomConfig
from utils.storage import prepare_output_dir
from volume_core import load_volume, save_volume, project_fundus, save_projection

logger = logging.getLogger(__name__)

SPLIT_STREAMS = {'train': 0, 'test': 1}


@click.command('synth')
@click.argument('out_dir', type=click.Path(file_okay=False))
@click.option('--count', type=click.IntRange(min=0), help='Training pairs to generate.')
@click.option('--test-count', type=click.IntRange(min=0), help='Test pairs to generate.')
@click.option('--noise-sigma', type=click.FloatRange(min=0.0), help='Speckle noise on the OCT-like side.')
@click.option('--shape', nargs=3, type=click.IntRange(min=1), help='Volume depth, height, width.')
@pass_run
def synth(run, out_dir, count, test_count, noise_sigma, shape):
    """Write a phantom dataset tree (trainX/trainY/testX/testY) to OUT_DIR."""
    cfg = load_run_config(run.config_path, schema=PhantomConfig, overrides={
        'rng_seed': run.seed,
        'train_count': count,
        'test_count': test_count,
        'noise_sigma': noise_sigma,
        'volume_shape': list(shape) if shape else None,
    })
    prepare_output_dir(out_dir, run.force)

    with recorded_run(run, 'synth', out_dir, config=cfg.to_dict()) as manifest:
        for split, n in (('train', cfg.train_count), ('test', cfg.test_count)):
            x_dir = os.path.join(out_dir, f'{split}X')
            y_dir = os.path.join(out_dir, f'{split}Y')
            os.makedirs(x_dir, exist_ok=True)
            os.makedirs(y_dir, exist_ok=True)
            for index in range(n):
                pair_cfg = cfg.replace(rng_seed=derive_seed(cfg.rng_seed, SPLIT_STREAMS[split], index))
                x, y = generate_phantom_pair(pair_cfg)
                name = f'phantom_{index:03d}'
                save_volume(x, os.path.join(x_dir, name))
                save_volume(y, os.path.join(y_dir, name))
            manifest.outputs.extend([x_dir, y_dir])
            logger.info(f"Wrote {n} {split} phantom pairs under {out_dir}")
    click.echo(f"Phantom dataset written to {out_dir}")


@click.command('project')
@click.argument('volume_path', type=click.Path(exists=True))
@click.argument('out_path', type=click.Path(dir_okay=False))
@click.option('--mode', type=click.Choice(['mean', 'max']), default='mean', show_default=True,
              help='Depth reduction.')
@pass_run
def project(run, volume_path, out_path, mode):
    """Write the en-face projection of a volume as a PNG."""
    volume = load_volume(volume_path)
    ensure_free_file(out_path, run.force)
    with recorded_run(run, 'project', out_path, config={'mode': mode}, inputs=[volume_path]) as manifest:
        save_projection(project_fundus(volume, mode), out_path)
        manifest.outputs.append(out_path)
    click.echo(f"Projection written to {out_path}")
