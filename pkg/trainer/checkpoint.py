"""Self-describing binary checkpoint bundle.

Layout: MAGIC, the header length as little-endian uint64, a UTF-8 JSON
header, then the state payload written by torch.save. The header holds the
format version, the training config, the iteration counter and the payload
size, so a bundle can be inspected without unpickling anything. Equal states
serialize to equal bytes.
"""
import io
import json
import logging
import pickle
import struct

import torch

from models import TrainConfig
from utils.errors import DataError
from utils.storage import write_bytes_atomic

logger = logging.getLogger(__name__)

MAGIC = b'O2CBNDL1'
FORMAT_VERSION = 2

# Top-level entries every bundle carries besides config and iteration
STATE_KEYS = ('g_xy', 'g_yx', 'd_x', 'd_y', 'opt_g', 'opt_dx', 'opt_dy',
              'sched_g', 'sched_dx', 'sched_dy', 'pool_x', 'pool_y', 'torch_rng')


def _save_state(state):
    buffer = io.BytesIO()
    # the non-zip stream carries no archive timestamps
    torch.save(state, buffer, _use_new_zipfile_serialization=False)
    return buffer.getvalue()


def _load_state(payload, source):
    try:
        return torch.load(io.BytesIO(payload), map_location='cpu', weights_only=True)
    except (pickle.UnpicklingError, RuntimeError, EOFError) as e:
        raise DataError(f"{source} has a corrupt state payload: {e}")


class CheckpointBundle:
    """Weights, optimizer and scheduler states, pools, RNG state, iteration and config of a run."""

    def __init__(self, config, iteration, state):
        missing = [key for key in STATE_KEYS if key not in state]
        if missing:
            raise DataError(f"checkpoint state is missing {', '.join(missing)}")
        self.config = config
        self.iteration = iteration
        self.state = state

    def to_bytes(self):
        payload = _save_state({key: self.state[key] for key in STATE_KEYS})
        header = {
            'format': FORMAT_VERSION,
            'iteration': self.iteration,
            'config': self.config.to_dict(),
            'payload_bytes': len(payload),
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')
        return MAGIC + struct.pack('<Q', len(header_bytes)) + header_bytes + payload

    @classmethod
    def from_bytes(cls, data, source='checkpoint'):
        if data[:len(MAGIC)] != MAGIC:
            raise DataError(f"{source} is not a checkpoint bundle")
        start = len(MAGIC) + 8
        if len(data) < start:
            raise DataError(f"{source} is truncated")
        (header_length,) = struct.unpack('<Q', data[len(MAGIC):start])
        try:
            header = json.loads(data[start:start + header_length].decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise DataError(f"{source} has a corrupt header: {e}")
        if header.get('format') != FORMAT_VERSION:
            raise DataError(f"{source} has unsupported format {header.get('format')}")

        payload = data[start + header_length:]
        expected = header['payload_bytes']
        if len(payload) < expected:
            raise DataError(f"{source} is truncated at the state payload ({len(payload)} of {expected} bytes)")
        if len(payload) > expected:
            raise DataError(f"{source} has {len(payload) - expected} trailing bytes")
        config = TrainConfig.from_dict(header['config'])
        return cls(config, header['iteration'], _load_state(payload, source))

    def save(self, path):
        data = self.to_bytes()
        write_bytes_atomic(path, data)
        logger.info(f"Saved checkpoint at iteration {self.iteration} to {path} ({len(data) / 1e6:.1f} MB)")
        return path

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'rb') as handle:
                data = handle.read()
        except FileNotFoundError:
            raise DataError(f"checkpoint not found: {path}")
        return cls.from_bytes(data, source=path)
