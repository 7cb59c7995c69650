from volume_core.volume import (Domain, Volume, ProjectionImage, LUMA_WEIGHTS, normalize, denormalize,
                                luminance, to_luminance, replicate_channels, project_fundus, save_projection)
from volume_core.io import load_volume, save_volume, load_volumes, list_volume_paths, read_stack
