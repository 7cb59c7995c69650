import logging

import torch
import torch.nn as nn
import torch.nn.functional as F
from mongoengine.errors import ValidationError

from utils.errors import ConfigError, DataError
from volume_core import Domain, Volume

logger = logging.getLogger(__name__)


class SamePad3d(nn.Module):
    """Pad (D, H, W) by half an odd kernel: reflect, or replicate on axes too short to reflect."""

    def __init__(self, kernel):
        super().__init__()
        self.pads = tuple(k // 2 for k in kernel)

    def forward(self, x):
        for axis, pad in zip((2, 3, 4), self.pads):
            if pad == 0:
                continue
            widths = [0] * 6
            widths[2 * (4 - axis)] = widths[2 * (4 - axis) + 1] = pad
            x = F.pad(x, tuple(widths), mode='reflect' if pad < x.shape[axis] else 'replicate')
        return x

    def extra_repr(self):
        return f"pads={self.pads}"


def _norm(cfg, channels):
    return nn.InstanceNorm3d(channels, affine=cfg.norm_affine)


def conv_block(cfg, in_channels, out_channels, kernel):
    """Same-padded conv, instance norm, ReLU; (D, H, W) preserved."""
    return [
        SamePad3d(kernel),
        nn.Conv3d(in_channels, out_channels, tuple(kernel), bias=False),
        _norm(cfg, out_channels),
        nn.ReLU(inplace=True),
    ]


def down_block(cfg, in_channels, out_channels):
    """Halve H and W; depth is never strided."""
    kernel = tuple(cfg.conv_kernel)
    return [
        nn.Conv3d(in_channels, out_channels, kernel, stride=(1, 2, 2),
                  padding=tuple(k // 2 for k in kernel), bias=False),
        _norm(cfg, out_channels),
        nn.ReLU(inplace=True),
    ]


def up_block(cfg, in_channels, out_channels):
    """Fractional-strided conv doubling H and W exactly."""
    kernel = tuple(cfg.conv_kernel)
    return [
        nn.ConvTranspose3d(in_channels, out_channels, kernel, stride=(1, 2, 2),
                           padding=tuple(k // 2 for k in kernel), output_padding=(0, 1, 1), bias=False),
        _norm(cfg, out_channels),
        nn.ReLU(inplace=True),
    ]


def head_block(cfg, in_channels):
    return [
        SamePad3d(cfg.stem_kernel),
        nn.Conv3d(in_channels, cfg.out_channels, tuple(cfg.stem_kernel)),
        nn.Tanh(),
    ]


class ResnetBlock3D(nn.Module):
    def __init__(self, cfg, channels):
        super().__init__()
        kernel = tuple(cfg.conv_kernel)
        self.block = nn.Sequential(
            *conv_block(cfg, channels, channels, kernel),
            SamePad3d(kernel),
            nn.Conv3d(channels, channels, kernel, bias=False),
            _norm(cfg, channels),
        )

    def forward(self, x):
        return x + self.block(x)


class ResnetGenerator3D(nn.Module):
    """Stem, strided downsampling, residual trunk, fractional-strided upsampling, tanh head."""

    def __init__(self, cfg):
        super().__init__()
        self.config = cfg
        width = cfg.base_width
        layers = conv_block(cfg, cfg.in_channels, width, cfg.stem_kernel)
        for _ in range(cfg.n_downsampling):
            layers += down_block(cfg, width, width * 2)
            width *= 2
        layers += [ResnetBlock3D(cfg, width) for _ in range(cfg.n_res_blocks)]
        for _ in range(cfg.n_downsampling):
            layers += up_block(cfg, width, width // 2)
            width //= 2
        layers += head_block(cfg, width)
        self.model = nn.Sequential(*layers)

    def forward(self, x):
        return self.model(x)


class UnetGenerator3D(nn.Module):
    """Encoder-decoder of n_downsampling levels with skip concatenation at every level."""

    def __init__(self, cfg):
        super().__init__()
        self.config = cfg
        widths = [cfg.base_width * 2 ** level for level in range(cfg.n_downsampling + 1)]
        self.stem = nn.Sequential(*conv_block(cfg, cfg.in_channels, widths[0], cfg.stem_kernel))
        self.down = nn.ModuleList(
            nn.Sequential(*down_block(cfg, widths[i], widths[i + 1])) for i in range(cfg.n_downsampling))
        self.bottleneck = nn.Sequential(*conv_block(cfg, widths[-1], widths[-1], cfg.conv_kernel))
        self.up = nn.ModuleList(
            nn.Sequential(*up_block(cfg, widths[i + 1], widths[i])) for i in reversed(range(cfg.n_downsampling)))
        self.fuse = nn.ModuleList(
            nn.Sequential(*conv_block(cfg, widths[i] * 2, widths[i], cfg.conv_kernel))
            for i in reversed(range(cfg.n_downsampling)))
        self.head = nn.Sequential(*head_block(cfg, widths[0]))

    def forward(self, x):
        x = self.stem(x)
        skips = []
        for down in self.down:
            skips.append(x)
            x = down(x)
        x = self.bottleneck(x)
        for up, fuse, skip in zip(self.up, self.fuse, reversed(skips)):
            x = fuse(torch.cat([up(x), skip], dim=1))
        return self.head(x)


def init_weights(net, std):
    """Zero-mean Gaussian weights, zero biases; draws from torch's global generator."""
    for module in net.modules():
        if isinstance(module, (nn.Conv3d, nn.ConvTranspose3d)):
            nn.init.normal_(module.weight, 0.0, std)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.InstanceNorm3d) and module.affine:
            nn.init.normal_(module.weight, 1.0, std)
            nn.init.zeros_(module.bias)
    return net


def build_generator(cfg):
    try:
        cfg.validate()
    except ValidationError as e:
        raise ConfigError(f"invalid generator config: {e}")
    net = ResnetGenerator3D(cfg) if cfg.arch == 'resnet' else UnetGenerator3D(cfg)
    init_weights(net, cfg.init_std)
    logger.debug(f"Built {cfg.arch} generator {cfg.in_channels}->{cfg.out_channels} "
                 f"with {count_parameters(net)} parameters")
    return net


def count_parameters(net):
    return sum(p.numel() for p in net.parameters())


def check_input(cfg, batch):
    """Validate an (N, C, D, H, W) generator input."""
    if batch.dim() != 5 or batch.shape[1] != cfg.in_channels:
        raise DataError(
            f"generator expects (N, {cfg.in_channels}, D, H, W) input, got {tuple(batch.shape)}")
    height, width = batch.shape[-2:]
    divisor = cfg.divisor
    if height % divisor or width % divisor:
        raise DataError(
            f"height and width must be divisible by 2^{cfg.n_downsampling} = {divisor}, got {height}x{width}")
    if batch.shape[2] * (height // divisor) * (width // divisor) < 2:
        # instance norm needs more than one voxel per channel at the bottleneck
        raise DataError(
            f"{tuple(batch.shape[2:])} leaves a single-voxel bottleneck after {cfg.n_downsampling} downsamplings")


def pad_to_multiple(batch, divisor):
    """Reflect-pad (replicate when too short) H and W up to the next multiple of divisor; returns the padded batch and the original size."""
    height, width = batch.shape[-2:]
    pad_h, pad_w = -height % divisor, -width % divisor
    if pad_h == 0 and pad_w == 0:
        return batch, (height, width)
    mode = 'reflect' if pad_h < height and pad_w < width else 'replicate'
    return F.pad(batch, (0, pad_w, 0, pad_h, 0, 0), mode=mode), (height, width)


def generator_forward(g, v, pad=False):
    """Translate one Volume; (D, H, W) preserved, channels follow the generator."""
    cfg = g.config
    batch = v.to_batch(next(g.parameters()).device)
    size = batch.shape[-2:]
    if pad:
        batch, size = pad_to_multiple(batch, cfg.divisor)
    check_input(cfg, batch)
    out = g(batch)[..., :size[0], :size[1]]
    return Volume.from_batch(out, domain=Domain.for_channels(cfg.out_channels))
