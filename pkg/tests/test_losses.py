import math

import pytest
import torch
import torch.nn as nn

from conftest import random_volume, tiny_generator
from losses import (adversarial_loss, cycle_loss, identity_loss, gradient_loss, generator_objective,
                    discriminator_objective, check_finite, build_report)
from models import LossWeights, LossReport
from nets import build_generator, generator_forward
from utils.errors import DataError, NumericError
from volume_core import Volume, to_luminance, replicate_channels


class ReplicateGenerator(nn.Module):
    """1 -> 3 stand-in copying its input to every channel."""

    def __init__(self):
        super().__init__()
        self.config = tiny_generator(1, 3)

    def forward(self, x):
        return x.expand(-1, 3, -1, -1, -1)


class ConstantGenerator(nn.Module):
    def __init__(self, value, in_channels=1, out_channels=3):
        super().__init__()
        self.config = tiny_generator(in_channels, out_channels)
        self.value = value

    def forward(self, x):
        shape = (x.shape[0], self.config.out_channels) + tuple(x.shape[2:])
        return torch.full(shape, self.value, dtype=x.dtype)


def agreement(fn, x, step=1e-4, rtol=1e-3):
    """Share of coordinates where the autograd gradient matches central differences."""
    x = x.detach().double().clone().requires_grad_(True)
    fn(x).backward()
    analytic = x.grad.flatten()
    flat = x.detach().flatten()
    matches = 0
    with torch.no_grad():
        for i in range(flat.numel()):
            plus, minus = flat.clone(), flat.clone()
            plus[i] += step
            minus[i] -= step
            numeric = (fn(plus.view_as(x)) - fn(minus.view_as(x))).item() / (2 * step)
            scale = max(abs(numeric), abs(analytic[i].item()))
            if abs(numeric - analytic[i].item()) <= rtol * scale + 1e-9:
                matches += 1
    return matches / flat.numel()


def test_adversarial_loss_values():
    zeros = torch.zeros(1, 1, 3, 4, 4)
    assert adversarial_loss(zeros, True).item() == pytest.approx(math.log(2), abs=1e-6)
    assert adversarial_loss(zeros, False).item() == pytest.approx(math.log(2), abs=1e-6)
    confident = torch.full((1, 1, 1, 1, 1), 20.0, dtype=torch.float64)
    assert adversarial_loss(confident, True).item() == pytest.approx(2.061e-9, rel=1e-3)
    logits = torch.randn(2, 1, 3, 4, 4, generator=torch.Generator().manual_seed(0))
    assert adversarial_loss(logits, True).item() == pytest.approx(adversarial_loss(-logits, False).item(), abs=1e-6)


def test_discriminator_objective():
    zeros = torch.zeros(1, 1, 2, 3, 3)
    assert discriminator_objective(zeros, zeros).item() == pytest.approx(math.log(2), abs=1e-6)
    real, fake = torch.full((1, 1, 1, 2, 2), 30.0), torch.full((1, 1, 1, 2, 2), -30.0)
    assert discriminator_objective(real, fake).item() < 1e-12
    a, b = torch.randn(1, 1, 2, 3, 3), torch.randn(1, 1, 2, 3, 3)
    expected = 0.5 * (adversarial_loss(a, True) + adversarial_loss(b, False))
    assert discriminator_objective(a, b).item() == pytest.approx(expected.item(), abs=1e-7)


def test_cycle_loss_values(gray_volume):
    assert cycle_loss(gray_volume, gray_volume).item() == 0.0
    shifted = Volume((gray_volume.data * 0.5 + 0.25))
    base = Volume(gray_volume.data * 0.5)
    assert cycle_loss(base, shifted).item() == pytest.approx(0.25, abs=1e-6)

    a, b = random_volume((2, 2, 2, 1), seed=1), random_volume((2, 2, 2, 1), seed=2)
    expected = sum(abs(a.data[d, h, w, 0].item() - b.data[d, h, w, 0].item())
                   for d in range(2) for h in range(2) for w in range(2)) / 8
    assert cycle_loss(a, b).item() == pytest.approx(expected, abs=1e-6)
    with pytest.raises(DataError):
        cycle_loss(a, random_volume((2, 2, 3, 1)))


def test_identity_loss_fixed_point():
    grey = random_volume((3, 8, 8, 1), seed=3)
    achromatic = replicate_channels(grey)
    assert identity_loss(ReplicateGenerator(), achromatic).item() == pytest.approx(0.0, abs=1e-7)


def test_identity_loss_of_a_constant_generator(colour_volume):
    g = ConstantGenerator(0.25)
    expected = (0.25 - colour_volume.data).abs().mean().item()
    assert identity_loss(g, colour_volume).item() == pytest.approx(expected, abs=1e-6)


def test_identity_loss_composes_public_operations(colour_volume, gray_volume):
    torch.manual_seed(0)
    g = build_generator(tiny_generator(1, 3))
    with torch.no_grad():
        direct = identity_loss(g, colour_volume).item()
        composed = cycle_loss(colour_volume, generator_forward(g, to_luminance(colour_volume))).item()
    assert direct == pytest.approx(composed, abs=1e-6)

    f = build_generator(tiny_generator(3, 1))
    with torch.no_grad():
        direct = identity_loss(f, gray_volume).item()
        composed = cycle_loss(gray_volume, generator_forward(f, replicate_channels(gray_volume))).item()
    assert direct == pytest.approx(composed, abs=1e-6)


def test_identity_loss_rejects_the_wrong_domain(gray_volume):
    with pytest.raises(DataError):
        identity_loss(ReplicateGenerator(), gray_volume)


def test_gradient_loss_hand_computed_line():
    source = Volume(torch.tensor([0.0, 0.0, 1.0, 1.0]).reshape(1, 1, 4, 1))
    flat = Volume(torch.zeros(1, 1, 4, 1))
    assert gradient_loss(source, flat).item() == pytest.approx(1 / 3, abs=1e-7)


def test_gradient_loss_fixed_points(colour_volume):
    assert gradient_loss(colour_volume, to_luminance(colour_volume)).item() == pytest.approx(0.0, abs=1e-7)
    a, b = Volume(torch.full((2, 4, 4, 3), 0.3)), Volume(torch.full((2, 4, 4, 1), -0.7))
    assert gradient_loss(a, b).item() == 0.0


def test_gradient_loss_ignores_constant_offsets():
    a, b = random_volume((2, 5, 5, 1), seed=4), random_volume((2, 5, 5, 1), seed=5)
    shifted_a, shifted_b = Volume(a.data * 0.5 + 0.2), Volume(b.data * 0.5 + 0.2)
    scaled_a, scaled_b = Volume(a.data * 0.5), Volume(b.data * 0.5)
    assert gradient_loss(shifted_a, shifted_b).item() == pytest.approx(
        gradient_loss(scaled_a, scaled_b).item(), abs=1e-6)


def test_gradient_loss_needs_a_spatial_axis():
    with pytest.raises(DataError):
        gradient_loss(Volume(torch.zeros(3, 1, 1, 1)), Volume(torch.zeros(3, 1, 1, 1)))
    with pytest.raises(DataError):
        gradient_loss(Volume(torch.zeros(3, 4, 4, 1)), Volume(torch.zeros(3, 4, 5, 1)))


def test_loss_gradients_match_finite_differences():
    gen = torch.Generator().manual_seed(0)
    logits = torch.randn(1, 1, 3, 4, 4, generator=gen, dtype=torch.float64)
    assert agreement(lambda z: adversarial_loss(z, True), logits) >= 0.99

    target = torch.rand(1, 3, 3, 8, 8, generator=gen, dtype=torch.float64) * 2 - 1
    guess = torch.rand(1, 3, 3, 8, 8, generator=gen, dtype=torch.float64) * 2 - 1
    assert agreement(lambda z: cycle_loss(target, z), guess) >= 0.99

    source = torch.rand(1, 3, 3, 8, 8, generator=gen, dtype=torch.float64) * 2 - 1
    translated = torch.rand(1, 1, 3, 8, 8, generator=gen, dtype=torch.float64) * 2 - 1
    assert agreement(lambda z: gradient_loss(source, z), translated) >= 0.99

    torch.manual_seed(1)
    g = build_generator(tiny_generator(1, 3)).double()
    y = torch.rand(1, 3, 3, 8, 8, generator=gen, dtype=torch.float64) * 2 - 1
    assert agreement(lambda z: identity_loss(g, z), y) >= 0.99


def test_generator_objective_weighting():
    ones = {name: 1.0 for name in LossReport.FIELDS}
    assert generator_objective(ones, LossWeights()) == pytest.approx(34.0)
    zeros = {name: 0.0 for name in LossReport.FIELDS}
    assert generator_objective(zeros, LossWeights()) == 0.0
    report = LossReport(adv_g=0.4, adv_f=0.6, cyc_x=3.0, id_g=2.0, grad_f=1.0)
    assert generator_objective(report, LossWeights(w_adv=1.0, w_cyc=0.0, w_id=0.0, w_grad=0.0)) == pytest.approx(1.0)


def test_generator_objective_is_linear_in_the_weights():
    report = LossReport(adv_g=0.4, adv_f=0.6, cyc_x=0.3, cyc_y=0.2, id_g=0.1, id_f=0.5, grad_g=0.7, grad_f=0.9)
    w1 = LossWeights(w_adv=1.0, w_cyc=2.0, w_id=0.5, w_grad=0.0)
    w2 = LossWeights(w_adv=0.0, w_cyc=1.0, w_id=3.0, w_grad=2.0)
    both = LossWeights(w_adv=1.0, w_cyc=3.0, w_id=3.5, w_grad=2.0)
    assert generator_objective(report, both) == pytest.approx(
        generator_objective(report, w1) + generator_objective(report, w2))


def test_non_finite_terms_are_named():
    with pytest.raises(NumericError, match='cyc_y'):
        check_finite({'adv_g': torch.tensor(0.1), 'cyc_y': torch.tensor(float('nan'))})
    parts = {name: torch.tensor(0.5) for name in LossReport.FIELDS}
    report = build_report(parts, iteration=7)
    assert report.iteration == 7 and report.d_x == 0.5
