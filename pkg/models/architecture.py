from mongoengine import EmbeddedDocument, IntField, StringField, BooleanField, FloatField, ListField
from mongoengine.errors import ValidationError

from models.base import SchemaMixin


class GeneratorConfig(SchemaMixin, EmbeddedDocument):
    """Architecture descriptor for a 3D translation generator (1 -> 3 or 3 -> 1 channels)."""
    in_channels = IntField(required=True, choices=[1, 3], default=1)
    out_channels = IntField(required=True, choices=[1, 3], default=3)
    n_downsampling = IntField(required=True, choices=[2, 3], default=3)
    n_res_blocks = IntField(required=True, min_value=0, max_value=64, default=9)
    base_width = IntField(required=True, min_value=1, max_value=1024, default=64)
    arch = StringField(required=True, choices=['resnet', 'unet'], default='resnet')
    padding_mode = StringField(required=True, choices=['reflect'], default='reflect')
    norm = StringField(required=True, choices=['instance'], default='instance')
    norm_affine = BooleanField(default=False)
    final_activation = StringField(required=True, choices=['tanh'], default='tanh')

    # Kernel plan as (depth, height, width); depth is never strided
    stem_kernel = ListField(IntField(min_value=1), default=lambda: [3, 7, 7])
    conv_kernel = ListField(IntField(min_value=1), default=lambda: [3, 3, 3])
    init_std = FloatField(min_value=0.0, default=0.02)

    def clean(self):
        """Cross-field rules: channel pairing and odd 3-axis kernels."""
        if (self.in_channels, self.out_channels) not in ((1, 3), (3, 1)):
            raise ValidationError(
                f"invalid channel pairing {self.in_channels}->{self.out_channels}; expected 1->3 or 3->1")
        if self.arch == 'resnet' and self.n_res_blocks < 1:
            raise ValidationError('resnet generator needs n_res_blocks >= 1')
        for name in ('stem_kernel', 'conv_kernel'):
            kernel = getattr(self, name)
            if len(kernel) != 3 or any(k % 2 == 0 for k in kernel):
                raise ValidationError(f"{name} must hold three odd sizes, got {list(kernel)}")

    @property
    def divisor(self):
        """Spatial sizes must be multiples of this value."""
        return 2 ** self.n_downsampling

    def mirrored(self):
        """The opposite-direction generator with the same layer plan."""
        return self.replace(in_channels=self.out_channels, out_channels=self.in_channels)


class DiscriminatorConfig(SchemaMixin, EmbeddedDocument):
    """Layer plan of the 3D PatchGAN discriminator."""
    in_channels = IntField(required=True, choices=[1, 3], default=3)
    widths = ListField(IntField(min_value=1), default=lambda: [64, 128, 256, 512])
    spatial_kernel = IntField(required=True, min_value=1, default=4)
    spatial_strides = ListField(IntField(min_value=1), default=lambda: [2, 2, 2, 1, 1])
    spatial_padding = IntField(required=True, min_value=0, default=1)
    depth_kernel = IntField(required=True, min_value=1, default=3)
    depth_stride = IntField(required=True, min_value=1, default=1)
    depth_padding = IntField(required=True, min_value=0, default=1)
    norm = StringField(required=True, choices=['instance', 'none'], default='instance')
    norm_affine = BooleanField(default=False)
    leaky_slope = FloatField(min_value=0.0, default=0.2)
    init_std = FloatField(min_value=0.0, default=0.02)

    # Inputs smaller than the receptive field are rejected unless this is off
    require_full_patch = BooleanField(default=True)

    def clean(self):
        """The stride plan covers every width layer plus the final logit conv."""
        if not self.widths:
            raise ValidationError('discriminator needs at least one width')
        if len(self.spatial_strides) != len(self.widths) + 1:
            raise ValidationError(
                f"spatial_strides needs {len(self.widths) + 1} entries for {len(self.widths)} widths, "
                f"got {len(self.spatial_strides)}")

    @property
    def n_layers(self):
        return len(self.spatial_strides)
