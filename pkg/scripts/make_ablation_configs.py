"""
Regenerate the ablation run configs under configs/.

Variants:
- two_down_no_grad: two downsampling layers, gradient loss off
- two_down_grad: two downsampling layers, gradient loss on
- three_down_grad: three downsampling layers, gradient loss on (the default architecture)

Each file only lists what differs from the TrainConfig defaults; every file is
validated against the schema before it is written.

Usage:
  python3 scripts/make_ablation_configs.py [OUT_DIR]
"""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from models import TrainConfig  # noqa: E402
from utils.storage import write_json_atomic  # noqa: E402

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'configs')

# variant -> (n_downsampling, w_grad)
VARIANTS = {
    'two_down_no_grad': (2, 0.0),
    'two_down_grad': (2, 1.0),
    'three_down_grad': (3, 1.0),
}


def variant_document(name, n_downsampling, w_grad):
    return {
        'generator_xy': {'in_channels': 1, 'out_channels': 3, 'n_downsampling': n_downsampling},
        'generator_yx': {'in_channels': 3, 'out_channels': 1, 'n_downsampling': n_downsampling},
        'loss_weights': {'w_grad': w_grad},
        'variant': name,
    }


def write_variants(out_dir=CONFIG_DIR):
    paths = []
    for name, (n_downsampling, w_grad) in VARIANTS.items():
        document = variant_document(name, n_downsampling, w_grad)
        TrainConfig.from_dict(document).validate()
        paths.append(write_json_atomic(os.path.join(out_dir, f'{name}.json'), document))
    return paths


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else CONFIG_DIR
    for path in write_variants(out_dir):
        print(f'Wrote {os.path.normpath(path)}')


if __name__ == '__main__':
    main()
