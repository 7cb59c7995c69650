from datetime import datetime

from mongoengine import EmbeddedDocumentField, ListField, DateTimeField
from mongoengine.errors import ValidationError


class SchemaMixin:
    """Dictionary round-trip for embedded documents used as run configuration.

    Documents are never saved to a database; mongoengine supplies field
    validation and defaults, this mixin supplies plain-dict serialization with
    every default materialized.
    """

    def to_dict(self):
        """Convert to a plain dictionary, nested documents included."""
        data = {}
        for name in self._fields_ordered:
            data[name] = _export(self._fields[name], getattr(self, name))
        return data

    @classmethod
    def from_dict(cls, data):
        """Build a document from a dictionary, rejecting unknown keys."""
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ValidationError(f"{cls.__name__} expects an object, got {type(data).__name__}")
        unknown = sorted(set(data) - set(cls._fields_ordered))
        if unknown:
            raise ValidationError(f"{cls.__name__}: unknown field(s) {', '.join(unknown)}")
        kwargs = {}
        for name, value in data.items():
            kwargs[name] = _import(cls._fields[name], value)
        return cls(**kwargs)

    def replace(self, **changes):
        """Copy with some fields changed (nested documents are copied too)."""
        data = self.to_dict()
        data.update({k: v.to_dict() if isinstance(v, SchemaMixin) else v for k, v in changes.items()})
        return type(self).from_dict(data)

    def __repr__(self):
        return f'<{type(self).__name__} {self.to_dict()}>'


def _export(field, value):
    if value is None:
        return None
    if isinstance(field, EmbeddedDocumentField):
        return value.to_dict()
    if isinstance(field, ListField):
        return [_export(field.field, item) for item in value]
    if isinstance(field, DateTimeField):
        return value.isoformat()
    if isinstance(value, dict):
        return dict(value)
    return value


def _import(field, value):
    if value is None:
        return None
    if isinstance(field, EmbeddedDocumentField):
        if isinstance(value, dict):
            return field.document_type.from_dict(value)
        return value
    if isinstance(field, ListField):
        return [_import(field.field, item) for item in value]
    if isinstance(field, DateTimeField) and isinstance(value, str):
        return datetime.fromisoformat(value)
    return value
