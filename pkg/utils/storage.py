import hashlib
import json
import logging
import os
import shutil
import tempfile

from config import Config
from utils.errors import DataError

logger = logging.getLogger(__name__)


def write_bytes_atomic(path, data):
    """Write bytes to path through a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-')
    try:
        with os.fdopen(fd, 'wb') as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug(f"Wrote {len(data)} bytes to {path}")
    return path


def write_json_atomic(path, obj):
    """Serialize obj as indented JSON and write it atomically."""
    payload = json.dumps(obj, indent=2, sort_keys=True).encode('utf-8')
    return write_bytes_atomic(path, payload + b'\n')


def prepare_output_dir(path, force=False):
    """Create an output directory; an existing non-empty one needs force and is cleared."""
    if os.path.isdir(path) and os.listdir(path):
        if not force:
            raise DataError(f"output directory {path} is not empty (use --force to overwrite)")
        logger.warning(f"Clearing existing output directory {path}")
        shutil.rmtree(path)
    os.makedirs(path, exist_ok=True)
    return path


def is_valid_image_file(filename):
    """Check if the file is a readable slice or stack image."""
    allowed_extensions = Config.ALLOWED_EXTENSIONS
    return '.' in filename and filename.rsplit('.', 1)[1].lower() in allowed_extensions


def file_sha256(path):
    """Content hash of a file, or of every file under a directory in sorted order."""
    digest = hashlib.sha256()
    if os.path.isdir(path):
        for root, dirs, files in os.walk(path):
            dirs.sort()
            for name in sorted(files):
                full = os.path.join(root, name)
                digest.update(os.path.relpath(full, path).encode('utf-8'))
                with open(full, 'rb') as handle:
                    digest.update(handle.read())
    else:
        with open(path, 'rb') as handle:
            digest.update(handle.read())
    return digest.hexdigest()


def get_file_size_mb(path):
    """Get file size in MB"""
    return os.path.getsize(path) / (1024 * 1024)
