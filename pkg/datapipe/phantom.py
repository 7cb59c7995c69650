"""Procedural vessel phantoms standing in for paired OCT / confocal stacks.

The confocal-like volume carries vessels in red, nuclei in blue and sparse
T cells in green on a dark background; its OCT-like partner is the
luminance of the same volume plus seeded Gaussian noise.
"""
import logging

import numpy as np
import torch
from scipy import ndimage

from volume_core import Domain, Volume, to_luminance

logger = logging.getLogger(__name__)

# Steps of the random walk tracing one vessel centreline, per unit of image size
_WALK_DENSITY = 2
# Depth voxels are treated as this many times thicker than in-plane voxels
_DEPTH_SPACING = 2.0


def _vessel_channel(shape, count, radius_range, rng):
    depth, height, width = shape
    channel = np.zeros(shape, dtype=np.float64)
    steps = _WALK_DENSITY * max(height, width)
    for _ in range(count):
        radius = rng.uniform(*radius_range)
        point = rng.uniform([0, 0], [height, width])
        heading = rng.uniform(0, 2 * np.pi)
        centre_depth = rng.uniform(0, depth)

        centreline = np.zeros(shape, dtype=bool)
        for _ in range(steps):
            heading += rng.normal(0.0, 0.25)
            point = point + 0.5 * np.array([np.sin(heading), np.cos(heading)])
            h, w = int(point[0]), int(point[1])
            if not (0 <= h < height and 0 <= w < width):
                break
            centreline[min(int(centre_depth), depth - 1), h, w] = True
        if not centreline.any() or radius <= 0:
            continue

        distance = ndimage.distance_transform_edt(~centreline, sampling=(_DEPTH_SPACING, 1.0, 1.0))
        channel = np.maximum(channel, np.clip(1.0 - (distance / radius) ** 2, 0.0, 1.0))
    return channel


def _blob_channel(shape, density, radius, rng):
    count = int(round(density * np.prod(shape)))
    if count == 0 or radius <= 0:
        return np.zeros(shape, dtype=np.float64)
    spikes = np.zeros(shape, dtype=np.float64)
    flat = rng.integers(0, np.prod(shape), size=count)
    spikes.reshape(-1)[flat] = 1.0

    sigma = (radius / _DEPTH_SPACING, radius, radius)
    blobs = ndimage.gaussian_filter(spikes, sigma=sigma, mode='constant')
    delta = np.zeros([int(4 * s) * 2 + 1 for s in sigma])
    delta[tuple(n // 2 for n in delta.shape)] = 1.0
    peak = ndimage.gaussian_filter(delta, sigma=sigma, mode='constant').max()
    return np.clip(blobs / peak, 0.0, 1.0)


def generate_phantom_pair(cfg):
    """Return (x, y): an OCT-like Volume and its confocal-like colorization."""
    rng = np.random.default_rng(cfg.rng_seed)
    shape = tuple(cfg.volume_shape)

    red = _vessel_channel(shape, cfg.vessel_count, cfg.vessel_radius, rng)
    blue = _blob_channel(shape, cfg.nucleus_density, cfg.blob_radius, rng)
    green = _blob_channel(shape, cfg.tcell_density, cfg.blob_radius, rng)

    intensity = np.stack([red, green, blue], axis=-1)
    colour = cfg.background + (1.0 - cfg.background) * intensity
    y = Volume(torch.from_numpy(colour).to(torch.float32), Domain.CONFOCAL_LIKE)

    x = to_luminance(y)
    if cfg.noise_sigma > 0:
        noise = rng.normal(0.0, cfg.noise_sigma, size=x.shape)
        x = Volume((x.data + torch.from_numpy(noise).to(torch.float32)).clamp(-1.0, 1.0), Domain.OCT_LIKE)
    return x, y
