"""Typed errors shared by the spec parsers and the core model types."""


class SpecError(Exception):
    """Base class for every problem-specification failure.

    Carries an optional source location (``where``) and the name of the
    offending entity (``entity``) so messages can always point at both.
    """

    def __init__(self, message: str, where: str | None = None, entity: str | None = None):
        self.where = where
        self.entity = entity
        parts = []
        if where:
            parts.append(f"[{where}]")
        parts.append(message)
        if entity:
            parts.append(f"(entity: {entity})")
        super().__init__(" ".join(parts))


class SpecSyntaxError(SpecError):
    """Malformed input text (bad YAML, wrong node type, missing field)."""


class SpecReferenceError(SpecError):
    """Reference to an undeclared dim, tensor, or level."""


class SpecInvariantError(SpecError):
    """Structurally well-formed input that violates a model invariant."""
