from datapipe.augment import AugmentParams, augment, depth_window
from datapipe.dataset import (UnpairedDataset, TrainingStream, sample_unpaired, epoch_permutation,
                              iterations_per_epoch, make_loader)
from datapipe.phantom import generate_phantom_pair
