import torch

from volume_core import Volume


class ImagePool:
    """History of generated samples replayed to a discriminator.

    While filling, every query stores and returns its input. Once full, a
    query returns its input with probability 0.5, otherwise it returns a
    uniformly chosen stored sample and stores the input in its place.
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.stored = []

    def __len__(self):
        return len(self.stored)

    def query_one(self, fresh, rng):
        """Query with one (C, D, H, W) tensor."""
        if self.capacity == 0:
            return fresh
        fresh = fresh.detach()
        if len(self.stored) < self.capacity:
            self.stored.append(fresh.clone())
            return fresh
        if rng.random() < 0.5:
            return fresh
        index = int(rng.integers(0, self.capacity))
        replayed = self.stored[index]
        self.stored[index] = fresh.clone()
        return replayed

    def query(self, fresh, rng):
        """Query element by element with an (N, C, D, H, W) batch."""
        if self.capacity == 0:
            return fresh
        return torch.stack([self.query_one(sample, rng) for sample in fresh.detach()])

    def state_dict(self):
        return {'capacity': self.capacity, 'stored': [t.cpu() for t in self.stored]}

    def load_state_dict(self, state, device=None):
        self.capacity = state['capacity']
        self.stored = [t.to(device) if device is not None else t for t in state['stored']]


def pool_query(pool, fresh, rng):
    """Volume-level query."""
    out = pool.query_one(fresh.to_batch()[0], rng)
    return Volume(out.permute(1, 2, 3, 0), fresh.domain)
