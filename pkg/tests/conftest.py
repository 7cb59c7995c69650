import os

import numpy as np
import pytest
import torch

from datapipe import generate_phantom_pair
from models import (GeneratorConfig, DiscriminatorConfig, AugmentationConfig, PhantomConfig, TrainConfig,
                    LossWeights)
from volume_core import Volume, Domain, save_volume

PHANTOM_SHAPE = (4, 16, 16)


def tiny_generator(in_channels=1, out_channels=3, arch='resnet', n_downsampling=2):
    return GeneratorConfig(in_channels=in_channels, out_channels=out_channels, arch=arch,
                           n_downsampling=n_downsampling, n_res_blocks=1, base_width=4)


def tiny_discriminator(in_channels=3):
    return DiscriminatorConfig(in_channels=in_channels, widths=[4, 8], spatial_strides=[2, 2, 1],
                               require_full_patch=False)


def tiny_train_config(**overrides):
    """A CPU-sized cycle: four small nets, identity augmentation at the phantom size."""
    depth, size, _ = PHANTOM_SHAPE
    fields = dict(
        learning_rate=2e-4,
        pool_size=4,
        epochs=1,
        generator_xy=tiny_generator(1, 3),
        generator_yx=tiny_generator(3, 1),
        discriminator_x=tiny_discriminator(1),
        discriminator_y=tiny_discriminator(3),
        augmentation=AugmentationConfig.identity(size, depth=depth),
        loss_weights=LossWeights(),
        log_every=1,
        seed=3,
    )
    fields.update(overrides)
    return TrainConfig(**fields)


def phantom_config(**overrides):
    fields = dict(volume_shape=list(PHANTOM_SHAPE), vessel_count=2, noise_sigma=0.0, rng_seed=0)
    fields.update(overrides)
    return PhantomConfig(**fields)


def random_volume(shape, seed=0, domain=None):
    rng = np.random.default_rng(seed)
    data = torch.from_numpy(rng.uniform(-1.0, 1.0, size=shape)).to(torch.float32)
    return Volume(data, domain)


def write_phantom_tree(root, count=3, split='train'):
    for index in range(count):
        x, y = generate_phantom_pair(phantom_config(rng_seed=100 + index))
        save_volume(x, os.path.join(root, f'{split}X', f'phantom_{index:03d}'))
        save_volume(y, os.path.join(root, f'{split}Y', f'phantom_{index:03d}'))
    return root


@pytest.fixture
def gray_volume():
    return random_volume((3, 8, 8, 1), seed=1, domain=Domain.OCT_LIKE)


@pytest.fixture
def colour_volume():
    return random_volume((3, 8, 8, 3), seed=2, domain=Domain.CONFOCAL_LIKE)


@pytest.fixture
def train_config():
    return tiny_train_config()


@pytest.fixture
def phantom_root(tmp_path):
    return write_phantom_tree(str(tmp_path / 'phantom'))
