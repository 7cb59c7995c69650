import logging
from typing import NamedTuple

import torch.nn as nn
from mongoengine.errors import ValidationError

from utils.errors import ConfigError, DataError
from volume_core import Volume
from nets.generator import init_weights

logger = logging.getLogger(__name__)


class ReceptiveField(NamedTuple):
    depth: int
    height: int
    width: int


class LayerGeometry(NamedTuple):
    kernel: tuple
    stride: tuple
    padding: tuple


def layer_plan(cfg):
    """(kernel, stride, padding) per conv as (depth, height, width) triples, logit conv last."""
    plan = []
    for stride in cfg.spatial_strides:
        plan.append(LayerGeometry(
            (cfg.depth_kernel, cfg.spatial_kernel, cfg.spatial_kernel),
            (cfg.depth_stride, stride, stride),
            (cfg.depth_padding, cfg.spatial_padding, cfg.spatial_padding)))
    return plan


def receptive_field(cfg):
    """Per-axis extent of input that one logit sees: RF += (k - 1) * product of earlier strides."""
    extent, jump = [1, 1, 1], [1, 1, 1]
    for layer in layer_plan(cfg):
        for axis in range(3):
            extent[axis] += (layer.kernel[axis] - 1) * jump[axis]
            jump[axis] *= layer.stride[axis]
    return ReceptiveField(*extent)


def receptive_window(cfg, index):
    """Input interval [start, stop) per axis seen by the logit at `index`; may extend past the borders."""
    windows = []
    for axis in range(3):
        extent, jump, offset = 1, 1, 0
        for layer in layer_plan(cfg):
            offset += layer.padding[axis] * jump
            extent += (layer.kernel[axis] - 1) * jump
            jump *= layer.stride[axis]
        start = index[axis] * jump - offset
        windows.append((start, start + extent))
    return windows


def output_shape(cfg, input_shape):
    """Logit map (D, H, W) for an input (D, H, W) from the conv arithmetic."""
    shape = list(input_shape)
    for layer in layer_plan(cfg):
        shape = [(n + 2 * p - k) // s + 1 for n, k, s, p in zip(shape, layer.kernel, layer.stride, layer.padding)]
    return tuple(shape)


class PatchDiscriminator3D(nn.Module):
    """Strided conv stack emitting one raw logit per overlapping patch."""

    def __init__(self, cfg):
        super().__init__()
        self.config = cfg
        plan = layer_plan(cfg)
        layers = []
        channels = cfg.in_channels
        for i, (width, geometry) in enumerate(zip(cfg.widths, plan)):
            layers.append(nn.Conv3d(channels, width, geometry.kernel, geometry.stride, geometry.padding,
                                    bias=(i == 0 or cfg.norm == 'none')))
            if i > 0 and cfg.norm == 'instance':
                layers.append(nn.InstanceNorm3d(width, affine=cfg.norm_affine))
            layers.append(nn.LeakyReLU(cfg.leaky_slope, inplace=True))
            channels = width
        final = plan[-1]
        layers.append(nn.Conv3d(channels, 1, final.kernel, final.stride, final.padding))
        self.model = nn.Sequential(*layers)

    def forward(self, x):
        return self.model(x)


def build_discriminator(cfg):
    try:
        cfg.validate()
    except ValidationError as e:
        raise ConfigError(f"invalid discriminator config: {e}")
    net = PatchDiscriminator3D(cfg)
    init_weights(net, cfg.init_std)
    return net


def check_input(cfg, batch):
    if batch.dim() != 5 or batch.shape[1] != cfg.in_channels:
        raise DataError(
            f"discriminator expects (N, {cfg.in_channels}, D, H, W) input, got {tuple(batch.shape)}")
    spatial = tuple(batch.shape[2:])
    rf = receptive_field(cfg)
    if cfg.require_full_patch and (spatial[1] < rf.height or spatial[2] < rf.width):
        raise DataError(
            f"input {spatial[1]}x{spatial[2]} is smaller than the {rf.height}x{rf.width} receptive field")
    if min(output_shape(cfg, spatial)) < 1:
        raise DataError(f"input {spatial} is too small to produce any logit")


def discriminator_forward(d, v):
    """Raw logit map (N, 1, D', H', W') for a Volume or an (N, C, D, H, W) batch."""
    batch = v.to_batch(next(d.parameters()).device) if isinstance(v, Volume) else v
    check_input(d.config, batch)
    return d(batch)
