from losses.terms import adversarial_loss, cycle_loss, identity_loss, gradient_loss, adapt_to_input
from losses.objectives import generator_objective, discriminator_objective, check_finite, build_report
