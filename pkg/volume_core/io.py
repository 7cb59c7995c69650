import logging
import os

import numpy as np
import tifffile
from PIL import Image, UnidentifiedImageError

from utils.errors import DataError
from utils.storage import is_valid_image_file
from volume_core.volume import Domain, normalize, denormalize

logger = logging.getLogger(__name__)

TIFF_EXTENSIONS = ('.tif', '.tiff')


def _as_stack_slice(array, source):
    """Return an (H, W, C) uint8 slice, C in {1, 3}."""
    if array.dtype != np.uint8:
        raise DataError(f"{source}: only 8-bit slices are supported, got {array.dtype}")
    if array.ndim == 2:
        return array[:, :, np.newaxis]
    if array.ndim == 3 and array.shape[2] in (1, 3):
        return array
    raise DataError(f"{source}: unsupported slice shape {array.shape}")


def _read_png_slice(path):
    try:
        with Image.open(path) as image:
            mode = image.mode
            array = np.array(image) if mode in ('L', 'RGB') else None
    except (OSError, UnidentifiedImageError) as e:
        raise DataError(f"cannot read slice {path}: {e}")
    if array is None:
        raise DataError(f"{path}: unsupported image mode {mode} (expected L or RGB)")
    return _as_stack_slice(array, path)


def _read_tiff_pages(path):
    try:
        with tifffile.TiffFile(path) as tif:
            return [(f"{path}[page {i}]", _as_stack_slice(page.asarray(), f"{path}[page {i}]"))
                    for i, page in enumerate(tif.pages)]
    except (tifffile.TiffFileError, ValueError) as e:
        raise DataError(f"cannot read TIFF {path}: {e}")


def list_slice_files(directory):
    """PNG slices of a volume directory in lexicographic order."""
    return sorted(name for name in os.listdir(directory)
                  if is_valid_image_file(name) and name.lower().endswith('.png'))


def read_stack(path):
    """Read raw 8-bit slices as a (D, H, W, C) uint8 array."""
    if os.path.isdir(path):
        names = list_slice_files(path)
        if not names:
            raise DataError(f"volume directory {path} holds no PNG slices")
        slices = [(os.path.join(path, name), _read_png_slice(os.path.join(path, name))) for name in names]
    elif os.path.isfile(path) and path.lower().endswith(TIFF_EXTENSIONS):
        slices = _read_tiff_pages(path)
        if not slices:
            raise DataError(f"TIFF {path} holds no pages")
    elif not os.path.exists(path):
        raise DataError(f"volume not found: {path}")
    else:
        raise DataError(f"{path} is neither a slice directory nor a TIFF stack")

    first_source, first = slices[0]
    for source, array in slices[1:]:
        if array.shape != first.shape:
            raise DataError(
                f"slice {source} has shape {array.shape}, expected {first.shape} like {first_source}")
    return np.stack([array for _, array in slices], axis=0)


def load_volume(path, expected_domain=None):
    """Load a multi-page TIFF or a directory of PNG slices as a normalized Volume."""
    stack = read_stack(path)
    channels = stack.shape[3]
    domain = Domain.for_channels(channels)
    if expected_domain is not None and domain is not expected_domain:
        raise DataError(
            f"{path}: {channels}-channel volume does not match expected domain {expected_domain.name}")
    volume = normalize(stack, domain)
    logger.debug(f"Loaded {volume} from {path}")
    return volume


def save_volume(v, path):
    """Save as a multi-page TIFF when path ends in .tif/.tiff, otherwise as a PNG slice directory."""
    pixels = denormalize(v).numpy()
    gray = v.channels == 1
    if path.lower().endswith(TIFF_EXTENSIONS):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        if os.path.exists(path):
            os.remove(path)
        for page in pixels:
            tifffile.imwrite(path, page[:, :, 0] if gray else page,
                             photometric='minisblack' if gray else 'rgb', append=True)
    else:
        os.makedirs(path, exist_ok=True)
        width = max(3, len(str(v.depth - 1)))
        for index, page in enumerate(pixels):
            image = Image.fromarray(page[:, :, 0] if gray else page)
            image.save(os.path.join(path, f"slice_{index:0{width}d}.png"), format='PNG')
    logger.debug(f"Saved {v} to {path}")
    return path


def list_volume_paths(root):
    """Volumes directly under root: PNG slice directories and TIFF stacks, sorted by name."""
    if not os.path.isdir(root):
        raise DataError(f"dataset directory not found: {root}")
    paths = []
    for name in sorted(os.listdir(root)):
        full = os.path.join(root, name)
        if os.path.isdir(full) and list_slice_files(full):
            paths.append(full)
        elif os.path.isfile(full) and name.lower().endswith(TIFF_EXTENSIONS):
            paths.append(full)
    return paths


def load_volumes(root, expected_domain=None):
    return [load_volume(path, expected_domain) for path in list_volume_paths(root)]

