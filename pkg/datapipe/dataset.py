import logging
import math
import os

import numpy as np
import torch
from torch.utils.data import Dataset, DataLoader

from utils.errors import DataError
from volume_core import Domain, Volume, load_volume, list_volume_paths
from datapipe.augment import augment

logger = logging.getLogger(__name__)

SPLITS = ('train', 'test')

# Stream tags mixed into seeds so independent draws never share a generator
EPOCH_STREAM = 0
SAMPLE_STREAM = 1


class UnpairedDataset:
    """Two independent lists of volumes: X (OCT-like, 1 channel) and Y (confocal-like, 3 channels).

    Entries are file paths (loaded on access) or in-memory Volumes.
    """

    def __init__(self, domain_x, domain_y):
        self.domain_x = list(domain_x)
        self.domain_y = list(domain_y)

    @classmethod
    def from_root(cls, root, split='train'):
        """Read the root/<split>X and root/<split>Y layout."""
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r} (expected one of {', '.join(SPLITS)})")
        domain_x = list_volume_paths(os.path.join(root, f'{split}X'))
        domain_y = list_volume_paths(os.path.join(root, f'{split}Y'))
        logger.info(f"Dataset {root} [{split}]: {len(domain_x)} X volumes, {len(domain_y)} Y volumes")
        return cls(domain_x, domain_y)

    def __repr__(self):
        return f'<UnpairedDataset X={len(self.domain_x)} Y={len(self.domain_y)}>'

    def check_trainable(self):
        if not self.domain_x or not self.domain_y:
            raise DataError(
                f"training needs both domains non-empty, got |X|={len(self.domain_x)} |Y|={len(self.domain_y)}")

    def _load(self, entry, domain):
        if isinstance(entry, Volume):
            if entry.domain is not domain:
                raise DataError(f"{entry} found in the {domain.name} list")
            return entry
        return load_volume(entry, domain)

    def load_x(self, index):
        return self._load(self.domain_x[index], Domain.OCT_LIKE)

    def load_y(self, index):
        return self._load(self.domain_y[index], Domain.CONFOCAL_LIKE)


def epoch_permutation(n, seed, epoch):
    """Order in which X indices are visited during one epoch."""
    return np.random.default_rng([seed, EPOCH_STREAM, epoch]).permutation(n)


def sample_unpaired(ds, rng):
    """Draw x and y independently and uniformly."""
    ds.check_trainable()
    x_index = int(rng.integers(0, len(ds.domain_x)))
    y_index = int(rng.integers(0, len(ds.domain_y)))
    return ds.load_x(x_index), ds.load_y(y_index)


class TrainingStream(Dataset):
    """Training samples indexed by their global position in the run.

    Sample k belongs to epoch k // |X|; its X volume comes from that epoch's
    permutation while its Y volume and augmentation draws come from a
    generator seeded by (seed, k). Samples therefore do not depend on which
    worker loads them or on where a run was resumed.
    """

    def __init__(self, dataset, augmentation, seed):
        dataset.check_trainable()
        self.dataset = dataset
        self.augmentation = augmentation
        self.seed = seed
        self._permutations = {}

    def __len__(self):
        return len(self.dataset.domain_x)

    def _x_index(self, sample_index):
        n = len(self.dataset.domain_x)
        epoch, position = divmod(sample_index, n)
        if epoch not in self._permutations:
            self._permutations = {epoch: epoch_permutation(n, self.seed, epoch)}
        return int(self._permutations[epoch][position])

    def __getitem__(self, sample_index):
        rng = np.random.default_rng([self.seed, SAMPLE_STREAM, sample_index])
        x = self.dataset.load_x(self._x_index(sample_index))
        y = self.dataset.load_y(int(rng.integers(0, len(self.dataset.domain_y))))
        x = augment(x, self.augmentation, rng)
        y = augment(y, self.augmentation, rng)
        return x.to_batch()[0], y.to_batch()[0]


def iterations_per_epoch(dataset, batch_size):
    return math.ceil(len(dataset.domain_x) / batch_size)


def make_loader(stream, batch_size, start_iteration, stop_iteration, workers=0):
    """Ordered batches for iterations [start_iteration, stop_iteration)."""
    indices = range(start_iteration * batch_size, stop_iteration * batch_size)
    batches = [list(indices[i:i + batch_size]) for i in range(0, len(indices), batch_size)]
    return DataLoader(stream, batch_sampler=batches, num_workers=workers,
                      collate_fn=_stack_pairs, persistent_workers=False)


def _stack_pairs(samples):
    xs, ys = zip(*samples)
    return torch.stack(xs), torch.stack(ys)
