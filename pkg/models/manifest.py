from datetime import datetime, timezone

from mongoengine import EmbeddedDocument, StringField, IntField, DictField, ListField, DateTimeField

from models.base import SchemaMixin


def utcnow():
    return datetime.now(timezone.utc).replace(tzinfo=None)


class RunManifest(SchemaMixin, EmbeddedDocument):
    """Record written next to every command's outputs."""
    command = StringField(required=True, choices=['synth', 'train', 'translate', 'project', 'evaluate', 'report'])
    config = DictField()
    inputs = ListField(DictField())  # {'path': ..., 'sha256': ...}
    outputs = ListField(StringField())
    seed = IntField()
    tool_version = StringField(required=True)
    started_at = DateTimeField(required=True, default=utcnow)
    finished_at = DateTimeField()
    status = StringField(choices=['running', 'completed', 'failed'], default='running')

    def mark_completed(self, outputs=None):
        """Mark the command as completed."""
        if outputs is not None:
            self.outputs = [str(path) for path in outputs]
        self.status = 'completed'
        self.finished_at = utcnow()

    def mark_failed(self):
        self.status = 'failed'
        self.finished_at = utcnow()

    @property
    def duration_seconds(self):
        if self.started_at and self.finished_at:
            return (self.finished_at - self.started_at).total_seconds()
        return None

    def add_input(self, path, digest):
        self.inputs.append({'path': str(path), 'sha256': digest})
