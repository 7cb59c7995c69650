from trainer.pool import ImagePool, pool_query
from trainer.checkpoint import CheckpointBundle
from trainer.cyclegan import CycleGANTrainer, train, total_iterations, set_requires_grad, linear_decay
from trainer.inference import translate, load_generator, DIRECTIONS
from trainer.training_log import TrainingLog, read_training_log, smoothed
