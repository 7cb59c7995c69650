import logging

import torch

from nets import build_generator, generator_forward
from trainer.checkpoint import CheckpointBundle
from utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

# direction -> (state key, config field)
DIRECTIONS = {
    'x2y': ('g_xy', 'generator_xy'),
    'y2x': ('g_yx', 'generator_yx'),
}


def load_generator(ckpt, direction, device=None):
    """Rebuild one generator from a bundle (or bundle path) in evaluation mode."""
    if direction not in DIRECTIONS:
        raise ConfigError(f"unknown direction {direction!r} (expected one of {', '.join(DIRECTIONS)})")
    bundle = ckpt if isinstance(ckpt, CheckpointBundle) else CheckpointBundle.load(ckpt)
    state_key, config_field = DIRECTIONS[direction]
    generator = build_generator(getattr(bundle.config, config_field))
    generator.load_state_dict(bundle.state[state_key])
    return generator.to(device or torch.device('cpu')).eval()


def translate(ckpt, v, direction='x2y', pad_to_multiple=False, device=None):
    """Run the chosen generator on one Volume.

    Instance norm uses per-sample statistics, so evaluation mode computes the
    same function as training. With pad_to_multiple, H and W are
    reflect-padded to the generator's divisor and cropped back afterwards.
    """
    generator = load_generator(ckpt, direction, device)
    in_channels = generator.config.in_channels
    if v.channels != in_channels:
        raise DataError(f"direction {direction} expects {in_channels}-channel input, got {v.channels}")
    with torch.no_grad():
        out = generator_forward(generator, v, pad=pad_to_multiple)
    logger.debug(f"Translated {v} -> {out} ({direction})")
    return out
