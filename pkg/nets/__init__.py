from nets.generator import (ResnetGenerator3D, UnetGenerator3D, build_generator, generator_forward,
                            count_parameters, init_weights, pad_to_multiple)
from nets.discriminator import (PatchDiscriminator3D, ReceptiveField, build_discriminator, discriminator_forward,
                                receptive_field, receptive_window, output_shape, layer_plan)
