import math

import torch

from models import LossReport
from utils.errors import NumericError
from losses.terms import adversarial_loss

# LossReport fields grouped by the weight that scales them
WEIGHTED_TERMS = {
    'w_adv': ('adv_g', 'adv_f'),
    'w_cyc': ('cyc_x', 'cyc_y'),
    'w_id': ('id_g', 'id_f'),
    'w_grad': ('grad_g', 'grad_f'),
}


def _part(parts, name):
    return parts[name] if isinstance(parts, dict) else getattr(parts, name)


def generator_objective(parts, w):
    """Weighted sum of the generator terms; parts is a LossReport or a name -> tensor dict."""
    total = 0.0
    for weight_name, names in WEIGHTED_TERMS.items():
        weight = getattr(w, weight_name)
        for name in names:
            total = total + weight * _part(parts, name)
    return total


def discriminator_objective(real_logits, fake_logits):
    return 0.5 * (adversarial_loss(real_logits, True) + adversarial_loss(fake_logits, False))


def check_finite(parts):
    """Raise NumericError naming the first non-finite term."""
    for name in LossReport.FIELDS:
        if name not in parts:
            continue
        value = parts[name]
        value = value.item() if isinstance(value, torch.Tensor) else float(value)
        if not math.isfinite(value):
            raise NumericError(f"loss term {name} is not finite ({value})")


def build_report(parts, iteration=0):
    """LossReport of plain floats from a name -> scalar mapping."""
    check_finite(parts)
    values = {name: float(parts[name].item() if isinstance(parts[name], torch.Tensor) else parts[name])
              for name in LossReport.FIELDS}
    return LossReport(iteration=iteration, **values)
