import logging
from typing import NamedTuple

import torch
import torch.nn.functional as F

from utils.errors import DataError
from volume_core import Volume

logger = logging.getLogger(__name__)


class AugmentParams(NamedTuple):
    """The random draws behind one augmented sample."""
    depth_start: int
    zoom: float
    top: int
    left: int
    flipped: bool


def depth_window(v, depth, rng):
    """Random contiguous window of `depth` slices; depth 0 keeps the whole stack."""
    if depth == 0:
        return v, 0
    if v.depth < depth:
        raise DataError(f"volume {v.shape} has {v.depth} slices, need at least {depth}")
    start = int(rng.integers(0, v.depth - depth + 1))
    return Volume(v.data[start:start + depth], v.domain), start


def _resize(planes, height, width):
    """Bilinear resize of (D, C, H, W) planes; no-op when the size already matches."""
    if planes.shape[-2:] == (height, width):
        return planes
    return F.interpolate(planes, size=(height, width), mode='bilinear', align_corners=False)


def _reflect_pad_to(planes, size):
    height, width = planes.shape[-2:]
    pad_h, pad_w = max(0, size - height), max(0, size - width)
    if pad_h == 0 and pad_w == 0:
        return planes
    if pad_h >= height or pad_w >= width:
        raise DataError(f"cannot reflect-pad a {height}x{width} canvas up to {size}x{size}")
    top, left = pad_h // 2, pad_w // 2
    return F.pad(planes, (left, pad_w - left, top, pad_h - top), mode='reflect')


def augment(v, cfg, rng, return_params=False):
    """Window depth, resize to pre_crop_size, zoom, crop to crop_size, then maybe mirror the width axis.

    Draws from rng in a fixed order (depth start, zoom, top, left, flip) so a
    sample is a pure function of the generator state.
    """
    v, depth_start = depth_window(v, cfg.depth, rng)
    low, high = cfg.zoom_range
    zoom = float(rng.uniform(low, high))

    planes = v.data.permute(0, 3, 1, 2)
    planes = _resize(planes, cfg.pre_crop_size, cfg.pre_crop_size)
    zoomed = max(1, int(round(cfg.pre_crop_size * zoom)))
    planes = _resize(planes, zoomed, zoomed)
    planes = _reflect_pad_to(planes, cfg.crop_size)

    height, width = planes.shape[-2:]
    top = int(rng.integers(0, height - cfg.crop_size + 1))
    left = int(rng.integers(0, width - cfg.crop_size + 1))
    planes = planes[:, :, top:top + cfg.crop_size, left:left + cfg.crop_size]

    flipped = bool(rng.random() < cfg.flip_probability)
    if flipped:
        planes = torch.flip(planes, dims=(3,))

    out = Volume(planes.permute(0, 2, 3, 1).clamp(-1.0, 1.0).contiguous(), v.domain)
    params = AugmentParams(depth_start, zoom, top, left, flipped)
    if return_params:
        return out, params
    return out
