import torch
import torch.nn.functional as F

from utils.errors import DataError
from volume_core import Volume, luminance


def _as_batch(value):
    """Accept a Volume or an (N, C, D, H, W) tensor."""
    if isinstance(value, Volume):
        return value.to_batch()
    return value


def adversarial_loss(logits, target_real):
    """Mean BCE of sigmoid(logits) against all-real or all-fake, from raw logits."""
    target = torch.ones_like(logits) if target_real else torch.zeros_like(logits)
    return F.binary_cross_entropy_with_logits(logits, target)


def cycle_loss(original, reconstructed):
    """Mean absolute difference."""
    original, reconstructed = _as_batch(original), _as_batch(reconstructed)
    if original.shape != reconstructed.shape:
        raise DataError(f"cycle loss shape mismatch: {tuple(original.shape)} vs {tuple(reconstructed.shape)}")
    return (original - reconstructed).abs().mean()


def adapt_to_input(batch, in_channels):
    """Move an (N, C, D, H, W) batch to the generator's input channel count."""
    channels = batch.shape[1]
    if channels == in_channels:
        return batch
    if channels == 3 and in_channels == 1:
        return luminance(batch, dim=1)
    if channels == 1 and in_channels == 3:
        return batch.expand(-1, 3, -1, -1, -1)
    raise DataError(f"cannot adapt {channels} channel(s) to {in_channels}")


def identity_loss(g, y):
    """L1 between y and the generator applied to y's channel-adapted copy; y lives in g's output domain."""
    cfg = g.config
    y = _as_batch(y)
    if y.dim() != 5 or y.shape[1] != cfg.out_channels:
        raise DataError(
            f"identity loss needs a {cfg.out_channels}-channel target for a "
            f"{cfg.in_channels}->{cfg.out_channels} generator, got shape {tuple(y.shape)}")
    return cycle_loss(y, g(adapt_to_input(y, cfg.in_channels)))


def _luminance_of(batch):
    return luminance(batch, dim=1) if batch.shape[1] == 3 else batch


def gradient_loss(source, translated):
    """L1 between forward differences along H and W of the two volumes' luminance.

    An axis of extent 1 contributes nothing; both axes of extent 1 is an error.
    """
    source, translated = _luminance_of(_as_batch(source)), _luminance_of(_as_batch(translated))
    if source.shape[0] != translated.shape[0] or source.shape[2:] != translated.shape[2:]:
        raise DataError(
            f"gradient loss needs matching (N, D, H, W), got {tuple(source.shape)} and {tuple(translated.shape)}")
    height, width = source.shape[-2:]
    if height < 2 and width < 2:
        raise DataError(f"gradient loss needs height or width >= 2, got {height}x{width}")
    total = source.new_zeros(())
    if height >= 2:
        total = total + (torch.diff(source, dim=3) - torch.diff(translated, dim=3)).abs().mean()
    if width >= 2:
        total = total + (torch.diff(source, dim=4) - torch.diff(translated, dim=4)).abs().mean()
    return total
