import itertools
import logging
import os

import numpy as np
import torch
from mongoengine.errors import ValidationError
from tqdm import tqdm

from config import Config
from datapipe import TrainingStream, iterations_per_epoch, make_loader
from losses import (adversarial_loss, cycle_loss, identity_loss, gradient_loss,
                    generator_objective, discriminator_objective, check_finite, build_report)
from nets import build_generator, build_discriminator, discriminator_forward
from trainer.checkpoint import CheckpointBundle
from trainer.pool import ImagePool
from trainer.training_log import TrainingLog
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

POOL_STREAM = 2


def set_requires_grad(nets, flag):
    for net in nets:
        for param in net.parameters():
            param.requires_grad_(flag)


def linear_decay(start, length):
    """LR factor: 1 until `start`, then linearly down to 0 over `length` iterations (off when length is 0)."""
    def factor(iteration):
        if length == 0 or iteration < start:
            return 1.0
        return max(0.0, 1.0 - (iteration - start) / length)
    return factor


def configure_determinism(enabled=True):
    torch.backends.cudnn.benchmark = not enabled
    torch.backends.cudnn.deterministic = enabled


def total_iterations(cfg, dataset):
    """max_iterations when set, otherwise epochs over the X domain."""
    if cfg.max_iterations:
        return cfg.max_iterations
    return cfg.epochs * iterations_per_epoch(dataset, cfg.batch_size)


class CycleGANTrainer:
    """Owns G: X -> Y, F: Y -> X, D_X, D_Y, their optimizers and the two image pools."""

    def __init__(self, cfg, device=None):
        try:
            cfg.validate()
        except ValidationError as e:
            raise ConfigError(f"invalid training config: {e}")
        self.config = cfg
        self.device = device or torch.device('cpu')

        torch.manual_seed(cfg.seed)
        self.g_xy = build_generator(cfg.generator_xy).to(self.device)
        self.g_yx = build_generator(cfg.generator_yx).to(self.device)
        self.d_x = build_discriminator(cfg.discriminator_x).to(self.device)
        self.d_y = build_discriminator(cfg.discriminator_y).to(self.device)

        betas = (cfg.adam_beta1, cfg.adam_beta2)
        self.opt_g = torch.optim.Adam(
            itertools.chain(self.g_xy.parameters(), self.g_yx.parameters()), lr=cfg.learning_rate, betas=betas)
        self.opt_dx = torch.optim.Adam(self.d_x.parameters(), lr=cfg.learning_rate, betas=betas)
        self.opt_dy = torch.optim.Adam(self.d_y.parameters(), lr=cfg.learning_rate, betas=betas)
        decay = linear_decay(cfg.lr_decay_start, cfg.lr_decay_iterations)
        self.sched_g = torch.optim.lr_scheduler.LambdaLR(self.opt_g, decay)
        self.sched_dx = torch.optim.lr_scheduler.LambdaLR(self.opt_dx, decay)
        self.sched_dy = torch.optim.lr_scheduler.LambdaLR(self.opt_dy, decay)

        self.pool_x = ImagePool(cfg.pool_size)
        self.pool_y = ImagePool(cfg.pool_size)
        self.iteration = 0

    @property
    def generators(self):
        return [self.g_xy, self.g_yx]

    @property
    def discriminators(self):
        return [self.d_x, self.d_y]

    def iteration_rng(self, iteration):
        return np.random.default_rng([self.config.seed, POOL_STREAM, iteration])

    def generator_step(self, x, y):
        """One joint Adam update of G and F; returns the generator terms as tensors."""
        w = self.config.loss_weights
        set_requires_grad(self.discriminators, False)

        fake_y = self.g_xy(x)
        fake_x = self.g_yx(y)
        rec_x = self.g_yx(fake_y)
        rec_y = self.g_xy(fake_x)
        parts = {
            'adv_g': adversarial_loss(discriminator_forward(self.d_y, fake_y), True),
            'adv_f': adversarial_loss(discriminator_forward(self.d_x, fake_x), True),
            'cyc_x': cycle_loss(x, rec_x),
            'cyc_y': cycle_loss(y, rec_y),
            'id_g': identity_loss(self.g_xy, y),
            'id_f': identity_loss(self.g_yx, x),
            'grad_g': gradient_loss(x, fake_y),
            'grad_f': gradient_loss(y, fake_x),
        }
        check_finite(parts)

        self.opt_g.zero_grad(set_to_none=True)
        generator_objective(parts, w).backward()
        self.opt_g.step()
        set_requires_grad(self.discriminators, True)
        return parts, fake_x.detach(), fake_y.detach()

    def discriminator_step(self, real, fake, d, opt, pool, rng):
        pooled = pool.query(fake, rng)
        opt.zero_grad(set_to_none=True)
        loss = discriminator_objective(discriminator_forward(d, real), discriminator_forward(d, pooled))
        check_finite({'d_x' if d is self.d_x else 'd_y': loss})
        loss.backward()
        opt.step()
        return loss.detach()

    def train_step(self, x, y):
        """G/F update, then D_Y and D_X updates on pool-drawn fakes; returns the LossReport."""
        x, y = x.to(self.device), y.to(self.device)
        rng = self.iteration_rng(self.iteration)
        parts, fake_x, fake_y = self.generator_step(x, y)
        parts['d_y'] = self.discriminator_step(y, fake_y, self.d_y, self.opt_dy, self.pool_y, rng)
        parts['d_x'] = self.discriminator_step(x, fake_x, self.d_x, self.opt_dx, self.pool_x, rng)
        for scheduler in (self.sched_g, self.sched_dx, self.sched_dy):
            scheduler.step()
        report = build_report(parts, self.iteration)
        self.iteration += 1
        return report

    def fit(self, dataset, stop_iteration, workers=0, log=None, run_dir=None, progress=False):
        """Train from the current iteration up to stop_iteration; returns the LossReports."""
        cfg = self.config
        stream = TrainingStream(dataset, cfg.augmentation, cfg.seed)
        loader = make_loader(stream, cfg.batch_size, self.iteration, stop_iteration, workers)
        reports = []
        bar = tqdm(total=stop_iteration, initial=self.iteration, disable=not progress, desc='train')
        try:
            for x, y in loader:
                report = self.train_step(x, y)
                reports.append(report)
                if log is not None:
                    log.append(report)
                bar.update(1)
                bar.set_postfix(cyc=f"{report.cyc_x + report.cyc_y:.4f}",
                                adv=f"{report.adv_g + report.adv_f:.4f}",
                                d=f"{report.d_x + report.d_y:.4f}")
                if not progress and self.iteration % cfg.log_every == 0:
                    logger.info(f"iteration {self.iteration}/{stop_iteration} "
                                f"cyc={report.cyc_x + report.cyc_y:.4f} adv={report.adv_g + report.adv_f:.4f} "
                                f"d={report.d_x + report.d_y:.4f}")
                if run_dir and cfg.checkpoint_every and self.iteration % cfg.checkpoint_every == 0:
                    self.bundle().save(os.path.join(run_dir, Config.CHECKPOINT_NAME))
        finally:
            bar.close()
        return reports

    def bundle(self):
        state = {
            'g_xy': self.g_xy.state_dict(),
            'g_yx': self.g_yx.state_dict(),
            'd_x': self.d_x.state_dict(),
            'd_y': self.d_y.state_dict(),
            'opt_g': self.opt_g.state_dict(),
            'opt_dx': self.opt_dx.state_dict(),
            'opt_dy': self.opt_dy.state_dict(),
            'sched_g': self.sched_g.state_dict(),
            'sched_dx': self.sched_dx.state_dict(),
            'sched_dy': self.sched_dy.state_dict(),
            'pool_x': self.pool_x.state_dict(),
            'pool_y': self.pool_y.state_dict(),
            'torch_rng': torch.get_rng_state(),
        }
        return CheckpointBundle(self.config, self.iteration, state)

    def restore(self, bundle):
        """Continue from a bundle; its architecture must match this trainer's."""
        if bundle.config.architecture_dict() != self.config.architecture_dict():
            raise ConfigError('cannot resume: checkpoint architecture differs from the run config')
        state = bundle.state
        for name in ('g_xy', 'g_yx', 'd_x', 'd_y', 'opt_g', 'opt_dx', 'opt_dy', 'sched_g', 'sched_dx', 'sched_dy'):
            getattr(self, name).load_state_dict(state[name])
        self.pool_x.load_state_dict(state['pool_x'], self.device)
        self.pool_y.load_state_dict(state['pool_y'], self.device)
        torch.set_rng_state(state['torch_rng'])
        self.iteration = bundle.iteration
        logger.info(f"Resumed at iteration {self.iteration}")
        return self


def train(cfg, dataset, run_dir=None, resume=None, device=None, workers=0, progress=False, deterministic=True):
    """Run the configured number of iterations and return the final CheckpointBundle.

    With run_dir set, the training log, periodic checkpoints and the final
    checkpoint are written there. Loss trajectories are reproducible for a
    fixed seed whatever the worker count.
    """
    configure_determinism(deterministic)
    trainer = CycleGANTrainer(cfg, device)
    if resume is not None:
        trainer.restore(resume if isinstance(resume, CheckpointBundle) else CheckpointBundle.load(resume))

    stop = total_iterations(cfg, dataset)
    log = None
    if run_dir:
        os.makedirs(run_dir, exist_ok=True)
        log = TrainingLog(os.path.join(run_dir, Config.TRAIN_LOG_NAME))
        log.start(trainer.iteration)
    if trainer.iteration < stop:
        logger.info(f"Training iterations {trainer.iteration}..{stop} on {dataset}")
        trainer.fit(dataset, stop, workers=workers, log=log, run_dir=run_dir, progress=progress)

    bundle = trainer.bundle()
    if run_dir:
        bundle.save(os.path.join(run_dir, Config.CHECKPOINT_NAME))
    return bundle
