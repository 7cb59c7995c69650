from mongoengine import (EmbeddedDocument, IntField, FloatField, ListField, StringField,
                         EmbeddedDocumentField)
from mongoengine.errors import ValidationError

from models.base import SchemaMixin
from models.architecture import GeneratorConfig, DiscriminatorConfig


class LossWeights(SchemaMixin, EmbeddedDocument):
    """Weights of the four generator loss terms."""
    w_adv = FloatField(required=True, min_value=0.0, default=1.0)
    w_cyc = FloatField(required=True, min_value=0.0, default=10.0)
    w_id = FloatField(required=True, min_value=0.0, default=5.0)
    w_grad = FloatField(required=True, min_value=0.0, default=1.0)


class AugmentationConfig(SchemaMixin, EmbeddedDocument):
    """Spatial augmentation: resize, zoom, crop, flip; plus depth windowing."""
    flip_probability = FloatField(required=True, min_value=0.0, max_value=1.0, default=0.5)
    zoom_range = ListField(FloatField(), default=lambda: [0.9, 1.1])
    pre_crop_size = IntField(required=True, min_value=1, default=522)
    crop_size = IntField(required=True, min_value=1, default=512)
    depth = IntField(required=True, min_value=0, default=9)  # 0 keeps full depth

    def clean(self):
        """Zoom bounds are positive and ordered; the crop fits the canvas."""
        if len(self.zoom_range) != 2:
            raise ValidationError(f"zoom_range needs [low, high], got {list(self.zoom_range)}")
        low, high = self.zoom_range
        if not (0.0 < low <= high):
            raise ValidationError(f"zoom_range must satisfy 0 < low <= high, got [{low}, {high}]")
        if self.crop_size > self.pre_crop_size:
            raise ValidationError(
                f"crop_size {self.crop_size} exceeds pre_crop_size {self.pre_crop_size}")

    @classmethod
    def identity(cls, size, depth=0):
        """Degenerate pipeline that returns its input unchanged."""
        return cls(flip_probability=0.0, zoom_range=[1.0, 1.0], pre_crop_size=size,
                   crop_size=size, depth=depth)


class PhantomConfig(SchemaMixin, EmbeddedDocument):
    """Procedural vessel phantom used in place of real OCT/confocal pairs."""
    volume_shape = ListField(IntField(min_value=1), default=lambda: [9, 64, 64])
    vessel_count = IntField(required=True, min_value=0, default=6)
    vessel_radius = ListField(FloatField(min_value=0.0), default=lambda: [1.0, 2.5])
    nucleus_density = FloatField(required=True, min_value=0.0, max_value=1.0, default=0.002)
    tcell_density = FloatField(required=True, min_value=0.0, max_value=1.0, default=0.0004)
    blob_radius = FloatField(min_value=0.0, default=1.2)
    noise_sigma = FloatField(required=True, min_value=0.0, default=0.05)
    background = FloatField(min_value=-1.0, max_value=1.0, default=-1.0)
    rng_seed = IntField(required=True, default=0)

    # Dataset tree written by the synth command
    train_count = IntField(min_value=0, default=4)
    test_count = IntField(min_value=0, default=2)

    def clean(self):
        if len(self.volume_shape) != 3:
            raise ValidationError(f"volume_shape needs (depth, height, width), got {list(self.volume_shape)}")
        if len(self.vessel_radius) != 2 or self.vessel_radius[0] > self.vessel_radius[1]:
            raise ValidationError(f"vessel_radius needs [low, high], got {list(self.vessel_radius)}")


class TrainConfig(SchemaMixin, EmbeddedDocument):
    """Everything needed to reproduce a training run; embedded in every checkpoint."""
    learning_rate = FloatField(required=True, default=2e-5)
    adam_beta1 = FloatField(required=True, min_value=0.0, max_value=1.0, default=0.5)
    adam_beta2 = FloatField(required=True, min_value=0.0, max_value=1.0, default=0.999)
    batch_size = IntField(required=True, min_value=1, default=1)
    epochs = IntField(required=True, min_value=0, default=1)
    max_iterations = IntField(min_value=0, default=0)  # 0 means no cap
    pool_size = IntField(required=True, min_value=0, default=50)

    # Linear decay to zero over lr_decay_iterations, starting at lr_decay_start (off when 0)
    lr_decay_start = IntField(min_value=0, default=0)
    lr_decay_iterations = IntField(min_value=0, default=0)

    loss_weights = EmbeddedDocumentField(LossWeights, default=LossWeights)
    generator_xy = EmbeddedDocumentField(GeneratorConfig, default=GeneratorConfig)
    generator_yx = EmbeddedDocumentField(
        GeneratorConfig, default=lambda: GeneratorConfig(in_channels=3, out_channels=1))
    discriminator_x = EmbeddedDocumentField(
        DiscriminatorConfig, default=lambda: DiscriminatorConfig(in_channels=1))
    discriminator_y = EmbeddedDocumentField(
        DiscriminatorConfig, default=lambda: DiscriminatorConfig(in_channels=3))
    augmentation = EmbeddedDocumentField(AugmentationConfig, default=AugmentationConfig)

    seed = IntField(required=True, default=0)
    checkpoint_every = IntField(min_value=0, default=0)  # 0 saves only at the end
    log_every = IntField(min_value=1, default=10)
    workers = IntField(min_value=0, default=0)
    data_root = StringField(default='')
    run_dir = StringField(default='')
    variant = StringField(default='')

    def clean(self):
        """Channel plans of the four networks must agree."""
        if self.learning_rate is None or self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        g, f = self.generator_xy, self.generator_yx
        if (g.in_channels, g.out_channels) != (1, 3):
            raise ValidationError('generator_xy must map 1 -> 3 channels')
        if (f.in_channels, f.out_channels) != (3, 1):
            raise ValidationError('generator_yx must map 3 -> 1 channels')
        if self.discriminator_x.in_channels != 1 or self.discriminator_y.in_channels != 3:
            raise ValidationError('discriminator_x must read 1 channel and discriminator_y 3 channels')
        if g.n_downsampling != f.n_downsampling or g.arch != f.arch:
            raise ValidationError('generator_xy and generator_yx must share arch and n_downsampling')

    def architecture_dict(self):
        """The part of the config a resumed run must match exactly."""
        return {
            'generator_xy': self.generator_xy.to_dict(),
            'generator_yx': self.generator_yx.to_dict(),
            'discriminator_x': self.discriminator_x.to_dict(),
            'discriminator_y': self.discriminator_y.to_dict(),
        }


class LossReport(SchemaMixin, EmbeddedDocument):
    """Per-iteration diagnostics of every loss term."""
    FIELDS = ('adv_g', 'adv_f', 'cyc_x', 'cyc_y', 'id_g', 'id_f', 'grad_g', 'grad_f', 'd_x', 'd_y')

    iteration = IntField(min_value=0, default=0)
    adv_g = FloatField(default=0.0)
    adv_f = FloatField(default=0.0)
    cyc_x = FloatField(default=0.0)
    cyc_y = FloatField(default=0.0)
    id_g = FloatField(default=0.0)
    id_f = FloatField(default=0.0)
    grad_g = FloatField(default=0.0)
    grad_f = FloatField(default=0.0)
    d_x = FloatField(default=0.0)
    d_y = FloatField(default=0.0)

    def values(self):
        """Loss terms in CSV column order."""
        return [getattr(self, name) for name in self.FIELDS]

    def to_row(self):
        return [self.iteration] + self.values()
