"""Exception types shared across the toolkit."""


class Ctrl4DError(Exception):
    """Base class for all toolkit errors."""


class DomainError(Ctrl4DError, ValueError):
    """A numeric argument is outside the domain of the operation."""


class BoundsError(Ctrl4DError, ValueError):
    """A pixel or frame index lies outside its valid range."""


class ShapeError(Ctrl4DError, ValueError):
    """Array or grid dimensions do not match what the operation requires."""


class EmptyObjectError(Ctrl4DError, ValueError):
    """An instance mask covers no pixel with valid depth."""


class BehindCamera(Ctrl4DError):
    """The point has non-positive camera-space depth. Callers cull, not fatal."""


class ManifestError(Ctrl4DError, ValueError):
    """A dataset manifest entry is missing a required annotation.

    Carries the offending clip id and field name so batch jobs can report
    exactly what to fix.
    """

    def __init__(self, clip_id: str, field: str, message: str = ""):
        self.clip_id = clip_id
        self.field = field
        detail = message or f"clip {clip_id!r}: missing or invalid {field!r}"
        super().__init__(detail)


class RevisionConflict(Ctrl4DError):
    """A mutation carried a stale revision number."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"stale revision {got}, server is at {expected}")
