import os
from dotenv import load_dotenv
load_dotenv()


def _env_bool(name, default):
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


class Config:
    """Base configuration."""
    VERSION = '1.0.0'
    DEVICE = os.environ.get('OCT2CONF_DEVICE') or 'auto'
    LOG_LEVEL = os.environ.get('OCT2CONF_LOG_LEVEL') or 'INFO'
    DATA_ROOT = os.environ.get('OCT2CONF_DATA_ROOT') or 'data'
    RUNS_DIR = os.environ.get('OCT2CONF_RUNS_DIR') or 'runs'
    NUM_WORKERS = int(os.environ.get('OCT2CONF_WORKERS') or 0)

    # Pretrained embedder weights (optional local file, otherwise torchvision's registry)
    INCEPTION_WEIGHTS = os.environ.get('OCT2CONF_INCEPTION_WEIGHTS')

    # Reproducibility
    DETERMINISTIC = _env_bool('OCT2CONF_DETERMINISTIC', True)
    PROGRESS_BAR = _env_bool('OCT2CONF_PROGRESS_BAR', True)

    # Output file names inside a run directory
    CHECKPOINT_NAME = 'checkpoint.o2c'
    TRAIN_LOG_NAME = 'train_log.csv'
    MANIFEST_NAME = 'manifest.json'
    PROJECTION_NAME = 'projection.png'

    ALLOWED_EXTENSIONS = {'png', 'tif', 'tiff'}


class DevelopmentConfig(Config):
    """Development configuration."""
    LOG_LEVEL = os.environ.get('OCT2CONF_LOG_LEVEL') or 'DEBUG'


class ProductionConfig(Config):
    """Production configuration."""
    PROGRESS_BAR = _env_bool('OCT2CONF_PROGRESS_BAR', False)


class TestingConfig(Config):
    """Testing configuration."""
    DEVICE = 'cpu'
    NUM_WORKERS = 0
    PROGRESS_BAR = False
    DETERMINISTIC = True
    LOG_LEVEL = 'WARNING'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': Config
}


def resolve_device(cfg=Config):
    """Map the DEVICE setting to a torch.device ('auto' prefers CUDA)."""
    import torch

    name = (cfg.DEVICE or 'auto').lower()
    if name == 'auto':
        return torch.device('cuda' if torch.cuda.is_available() else 'cpu')
    return torch.device(name)


def load_run_config(path=None, overrides=None, schema=None, base=None):
    """Build a run configuration from a JSON file plus flag overrides.

    Precedence is flags > file > base > schema defaults, where base is a
    dict such as the config stored in a checkpoint. Overrides use dotted keys
    for nested documents, e.g. {'loss_weights.w_grad': 0.0}. Unset (None)
    overrides are ignored.
    """
    import json

    from mongoengine.errors import ValidationError

    from models import TrainConfig
    from utils.errors import ConfigError

    schema = schema or TrainConfig
    data = dict(base or {})
    if path:
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                loaded = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config {path}: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data.update(loaded)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        parts = key.split('.')
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value

    try:
        cfg = schema.from_dict(data)
        cfg.validate()
    except ValidationError as e:
        source = f" in {path}" if path else ''
        raise ConfigError(f"invalid {schema.__name__}{source}: {e}")
    return cfg
