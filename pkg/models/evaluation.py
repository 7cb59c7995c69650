from mongoengine import EmbeddedDocument, StringField, IntField, FloatField, ListField, EmbeddedDocumentField
from mongoengine.errors import ValidationError

from models.base import SchemaMixin

SCENARIOS = ('W_REF', 'WO_REF', 'TOTAL')


class RankRecord(SchemaMixin, EmbeddedDocument):
    """One rater's ranking of every entry shown for one image set (1 = best)."""
    rater_id = StringField(required=True, max_length=100)
    image_set_id = StringField(required=True, max_length=100)
    scenario = StringField(required=True, choices=['W_REF', 'WO_REF'], default='WO_REF')
    # Parallel lists: entries[i] received ranks[i]
    entries = ListField(StringField(min_length=1), required=True)
    ranks = ListField(IntField(), required=True)

    def clean(self):
        """Ranks must be a permutation of 1..m over distinct entries."""
        if len(self.entries) != len(self.ranks):
            raise ValidationError(
                f"record {self.label}: {len(self.entries)} entries but {len(self.ranks)} ranks")
        if len(set(self.entries)) != len(self.entries):
            raise ValidationError(f"record {self.label}: duplicate entries {list(self.entries)}")
        values = sorted(self.ranks)
        if len(values) < 2 or values != list(range(1, len(values) + 1)):
            raise ValidationError(
                f"record {self.label}: ranks {self.ranking} are not a permutation of 1..{len(values)}")

    @property
    def label(self):
        return f"rater={self.rater_id} set={self.image_set_id}"

    @property
    def ranking(self):
        """Entry name -> rank."""
        return dict(zip(self.entries, self.ranks))

    @classmethod
    def from_ranking(cls, rater_id, image_set_id, ranking, scenario='WO_REF'):
        names = list(ranking)
        return cls(rater_id=str(rater_id), image_set_id=str(image_set_id), scenario=scenario,
                   entries=names, ranks=[int(ranking[name]) for name in names])


class MethodScores(SchemaMixin, EmbeddedDocument):
    """One row of the evaluation table: a method in one scenario."""
    method = StringField(required=True, max_length=200)
    scenario = StringField(required=True, choices=list(SCENARIOS))
    fid768 = FloatField()
    fid2048 = FloatField()
    kid = FloatField()
    kid_std = FloatField()
    mos = FloatField(min_value=1.0, max_value=100.0)
    mos_std = FloatField(min_value=0.0)
    mos_ci95 = FloatField(min_value=0.0)
    n_generated = IntField(min_value=0)
    n_reference = IntField(min_value=0)


class MetricReport(SchemaMixin, EmbeddedDocument):
    """Evaluation table: rows per (method, scenario), columns FID768/FID2048/KID/MOS."""
    METRICS = ('fid768', 'fid2048', 'kid', 'mos')

    rows = ListField(EmbeddedDocumentField(MethodScores), default=list)
    embedder = StringField(default='')
    kid_blocks = IntField(min_value=1, default=1)

    # Tolerance for KID's unbiased estimator dipping below zero
    KID_EPSILON = 1e-3

    def clean(self):
        for row in self.rows:
            for name in ('fid768', 'fid2048'):
                value = getattr(row, name)
                if value is not None and value < -self.KID_EPSILON:
                    raise ValidationError(f"{row.method}/{row.scenario}: {name}={value} is negative")
            if row.kid is not None and row.kid < -self.KID_EPSILON:
                raise ValidationError(f"{row.method}/{row.scenario}: kid={row.kid} below tolerance")

    def methods(self):
        """Method names in first-seen order."""
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def scenarios(self):
        return [s for s in SCENARIOS if any(row.scenario == s for row in self.rows)]

    def get(self, method, scenario):
        for row in self.rows:
            if row.method == method and row.scenario == scenario:
                return row
        return None

    def upsert(self, row):
        """Insert a row, merging non-empty fields into an existing (method, scenario) row."""
        existing = self.get(row.method, row.scenario)
        if existing is None:
            self.rows.append(row)
            return row
        for name in row._fields_ordered:
            value = getattr(row, name)
            if value is not None and name not in ('method', 'scenario'):
                setattr(existing, name, value)
        return existing
