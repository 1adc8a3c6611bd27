"""Domain errors shared by every subsystem.

Each error maps to a stable machine-readable wire code so the gateway can
translate failures uniformly.
"""

from __future__ import annotations


class GeolabError(Exception):
    """Base class; ``code`` is the wire error code."""

    code = "INTERNAL"


class AuthError(GeolabError):
    code = "AUTH"


class AccessDenied(GeolabError):
    code = "PERM"


class NotFound(GeolabError):
    code = "NOTFOUND"


class Conflict(GeolabError):
    code = "CONFLICT"

    def __init__(self, message: str, current_revision: int | None = None):
        super().__init__(message)
        self.current_revision = current_revision


class ValidationError(GeolabError):
    code = "VALIDATION"


class LockError(GeolabError):
    code = "LOCK"


class InvalidDocument(ValidationError):
    """A construction document failed structural validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(f"[{v.step_id}] {v.code}: {v.message}" for v in self.violations)
        super().__init__(f"invalid document: {detail}")


class EditError(ValidationError):
    """An editing primitive was applied to an unsuitable target."""


class ParseError(ValidationError):
    """Malformed input to a decoder; carries the offending position when known."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
