import logging

import numpy as np
import torch
import torch.nn.functional as F

from utils.errors import ConfigError, DataError
from volume_core import project_fundus

logger = logging.getLogger(__name__)

FEATURE_DIMS = (768, 2048)


class FeatureEmbedder:
    """Maps (N, 3, H, W) RGB images in [0, 1] to (N, dim) float64 features."""
    name = 'abstract'
    input_size = 299
    dims = FEATURE_DIMS

    def embed(self, images, dim):
        raise NotImplementedError

    def check_dim(self, dim):
        if dim not in self.dims:
            raise ConfigError(f"{self.name} embedder has no {dim}-dim features (available: {list(self.dims)})")


class RandomProjectionEmbedder(FeatureEmbedder):
    """Fixed Gaussian projection of downsampled pixels; deterministic for a seed."""
    name = 'random-projection'

    def __init__(self, input_size=32, seed=0):
        self.input_size = input_size
        self.seed = seed
        in_features = 3 * input_size * input_size
        self._projections = {
            dim: np.random.default_rng([seed, dim]).normal(size=(in_features, dim)) / np.sqrt(in_features)
            for dim in self.dims
        }

    def embed(self, images, dim):
        self.check_dim(dim)
        pixels = images.detach().cpu().double().reshape(len(images), -1).numpy()
        return pixels @ self._projections[dim]


class InceptionEmbedder(FeatureEmbedder):
    """torchvision Inception-v3: 768 dims from pooled Mixed_6e, 2048 dims from the final average pool."""
    name = 'inception-v3'

    MEAN = (0.485, 0.456, 0.406)
    STD = (0.229, 0.224, 0.225)

    def __init__(self, weights_path=None, device=None, batch_size=16):
        from torchvision.models import inception_v3, Inception_V3_Weights

        self.device = device or torch.device('cpu')
        self.batch_size = batch_size
        if weights_path:
            model = inception_v3(weights=None, aux_logits=True, init_weights=False)
            model.load_state_dict(torch.load(weights_path, map_location='cpu'))
        else:
            model = inception_v3(weights=Inception_V3_Weights.IMAGENET1K_V1)
        self.model = model.to(self.device).eval()
        self._captured = {}
        self.model.Mixed_6e.register_forward_hook(self._capture('mixed_6e'))
        self.model.avgpool.register_forward_hook(self._capture('avgpool'))

    def _capture(self, key):
        def hook(module, inputs, output):
            self._captured[key] = output
        return hook

    def embed(self, images, dim):
        self.check_dim(dim)
        mean = torch.tensor(self.MEAN, device=self.device).view(1, 3, 1, 1)
        std = torch.tensor(self.STD, device=self.device).view(1, 3, 1, 1)
        features = []
        with torch.no_grad():
            for start in range(0, len(images), self.batch_size):
                batch = (images[start:start + self.batch_size].to(self.device).float() - mean) / std
                self.model(batch)
                if dim == 768:
                    pooled = F.adaptive_avg_pool2d(self._captured['mixed_6e'], 1)
                else:
                    pooled = self._captured['avgpool']
                features.append(pooled.flatten(1).double().cpu())
        return torch.cat(features).numpy()


def make_embedder(name='random', weights_path=None, device=None):
    if name in ('random', RandomProjectionEmbedder.name):
        return RandomProjectionEmbedder()
    if name in ('inception', InceptionEmbedder.name):
        return InceptionEmbedder(weights_path=weights_path, device=device)
    raise ConfigError(f"unknown embedder {name!r} (expected 'random' or 'inception')")


def projection_batch(volumes, size, mode='mean'):
    """Depth projections of volumes as an (N, 3, size, size) batch in [0, 1]."""
    images = []
    for volume in volumes:
        image = project_fundus(volume, mode).to_rgb().data.permute(2, 0, 1).unsqueeze(0)
        images.append(_resize(image, size)[0])
    return torch.stack(images).clamp(0.0, 1.0)


def _resize(images, size):
    if images.shape[-2:] == (size, size):
        return images
    return F.interpolate(images, size=(size, size), mode='bilinear', align_corners=False)


def embed_set(volumes, embedder, dim, mode='mean'):
    """Feature matrix (n x dim) of the volumes' depth projections, rows in input order."""
    volumes = list(volumes)
    if not volumes:
        raise DataError('cannot embed an empty volume set')
    embedder.check_dim(dim)
    return embedder.embed(projection_batch(volumes, embedder.input_size, mode), dim)
