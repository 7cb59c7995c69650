import enum
import logging

import numpy as np
import torch
from PIL import Image

from utils.errors import DataError

logger = logging.getLogger(__name__)

# Rec.601 luma weights for (R, G, B)
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class Domain(enum.Enum):
    OCT_LIKE = 'oct'
    CONFOCAL_LIKE = 'confocal'

    @property
    def channels(self):
        return 1 if self is Domain.OCT_LIKE else 3

    @classmethod
    def for_channels(cls, channels):
        if channels == 1:
            return cls.OCT_LIKE
        if channels == 3:
            return cls.CONFOCAL_LIKE
        raise DataError(f"no domain has {channels} channels (expected 1 or 3)")


class Volume:
    """A (depth, height, width, channel) float32 stack in [-1, 1] tagged with its domain."""

    __slots__ = ('data', 'domain')

    def __init__(self, data, domain=None):
        if not isinstance(data, torch.Tensor):
            data = torch.as_tensor(np.asarray(data))
        if data.dim() != 4:
            raise DataError(f"volume must be 4-D (depth, height, width, channel), got shape {tuple(data.shape)}")
        if min(data.shape[:3]) < 1:
            raise DataError(f"volume depth, height and width must be >= 1, got {tuple(data.shape)}")
        channels = data.shape[3]
        if domain is None:
            domain = Domain.for_channels(channels)
        if domain.channels != channels:
            raise DataError(f"{domain.name} volume needs {domain.channels} channel(s), got {channels}")
        data = data.detach().to(dtype=torch.float32)
        if not torch.isfinite(data).all():
            raise DataError('volume holds non-finite values')
        if data.numel() and (data.min() < -1.0 or data.max() > 1.0):
            raise DataError(f"volume values must lie in [-1, 1], got [{data.min().item()}, {data.max().item()}]")
        self.data = data
        self.domain = domain

    @property
    def shape(self):
        return tuple(self.data.shape)

    @property
    def depth(self):
        return self.data.shape[0]

    @property
    def channels(self):
        return self.data.shape[3]

    def to_batch(self, device=None):
        """(1, C, D, H, W) tensor as consumed by the networks."""
        batch = self.data.permute(3, 0, 1, 2).unsqueeze(0).contiguous()
        return batch.to(device) if device is not None else batch

    @classmethod
    def from_batch(cls, batch, index=0, domain=None):
        """Inverse of to_batch for one sample of an (N, C, D, H, W) tensor."""
        if batch.dim() != 5:
            raise DataError(f"expected an (N, C, D, H, W) batch, got shape {tuple(batch.shape)}")
        sample = batch[index].detach().cpu().permute(1, 2, 3, 0).contiguous()
        return cls(sample.clamp(-1.0, 1.0), domain)

    def __repr__(self):
        return f'<Volume {self.domain.name} {self.shape}>'


class ProjectionImage:
    """A (height, width, channel) image in [0, 1] collapsed from a Volume."""

    __slots__ = ('data',)

    def __init__(self, data):
        self.data = data.to(dtype=torch.float32).clamp(0.0, 1.0)

    @property
    def shape(self):
        return tuple(self.data.shape)

    def to_uint8(self):
        return np.floor(self.data.double().numpy() * 255.0 + 0.5).clip(0, 255).astype(np.uint8)

    def to_rgb(self):
        """Three-channel copy; grayscale projections are replicated."""
        if self.data.shape[2] == 3:
            return self
        return ProjectionImage(self.data.expand(-1, -1, 3).contiguous())


def normalize(raw, domain=None):
    """Map 8-bit intensities (integer or real) in [0, 255] to a Volume in [-1, 1].

    A 3-D input is read as a single-channel (depth, height, width) stack.
    """
    array = raw.numpy() if isinstance(raw, torch.Tensor) else np.asarray(raw)
    if array.ndim == 3:
        array = array[..., np.newaxis]
    if array.dtype.kind not in 'uif':
        raise DataError(f"cannot normalize values of dtype {array.dtype}")
    array = array.astype(np.float64)
    bad = np.argwhere(~((array >= 0.0) & (array <= 255.0)))
    if len(bad):
        index = tuple(int(i) for i in bad[0])
        raise DataError(f"value {array[index]} at index {index} is outside [0, 255]")
    data = torch.from_numpy(array / 127.5 - 1.0).to(torch.float32)
    return Volume(data, domain)


def denormalize(v):
    """Round (v + 1) * 127.5 half-up and clamp to uint8."""
    values = (v.data.double() + 1.0) * 127.5
    return torch.floor(values + 0.5).clamp(0, 255).to(torch.uint8)


def luminance(tensor, dim):
    """Rec.601 luminance of a 3-channel tensor along dim, keeping the axis.

    Written as R + wg*(G - R) + wb*(B - R), which equals the weighted sum and
    is exact on achromatic voxels.
    """
    if tensor.shape[dim] != 3:
        raise DataError(f"luminance needs 3 channels on axis {dim}, got {tensor.shape[dim]}")
    r, g, b = tensor.unbind(dim)
    _, wg, wb = LUMA_WEIGHTS
    return (r + wg * (g - r) + wb * (b - r)).unsqueeze(dim)


def to_luminance(v):
    if v.channels != 3:
        raise DataError(f"to_luminance needs a 3-channel volume, got {v.channels}")
    return Volume(luminance(v.data, dim=3).clamp(-1.0, 1.0), Domain.OCT_LIKE)


def replicate_channels(v):
    if v.channels != 1:
        raise DataError(f"replicate_channels needs a 1-channel volume, got {v.channels}")
    return Volume(v.data.expand(-1, -1, -1, 3).contiguous(), Domain.CONFOCAL_LIKE)


def project_fundus(v, mode='mean'):
    """Collapse depth into a fundus-like en-face image: mean (default) or max of (v + 1) / 2."""
    values = (v.data.double() + 1.0) / 2.0
    if mode == 'mean':
        projected = values.mean(dim=0)
    elif mode == 'max':
        projected = values.amax(dim=0)
    else:
        raise DataError(f"unknown projection mode {mode!r} (expected 'mean' or 'max')")
    return ProjectionImage(projected.to(torch.float32))


def save_projection(p, path):
    """Write a projection as an 8-bit grayscale or RGB PNG."""
    pixels = p.to_uint8()
    image = Image.fromarray(pixels[:, :, 0] if pixels.shape[2] == 1 else pixels)
    image.save(path, format='PNG')
    logger.debug(f"Saved projection {p.shape} to {path}")
    return path
