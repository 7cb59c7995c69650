# Models package: validated configuration and record schemas
from models.architecture import GeneratorConfig, DiscriminatorConfig
from models.training import LossWeights, AugmentationConfig, PhantomConfig, TrainConfig, LossReport
from models.evaluation import RankRecord, MethodScores, MetricReport, SCENARIOS
from models.manifest import RunManifest
