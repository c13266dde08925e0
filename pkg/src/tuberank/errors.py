"""Exception types shared across the pipeline."""


class TubeRankError(Exception):
    """Base class for all tube-rank specific errors."""


class GalleryFormatError(TubeRankError, ValueError):
    """Malformed, schema-violating or invariant-violating gallery data.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(TubeRankError, ValueError):
    """A configuration value violates its documented range or relation."""


class EmptyQueryError(TubeRankError):
    """Every frame of a query tube was removed; the pipeline cannot proceed."""


class EmptyGalleryError(TubeRankError):
    """The gallery contains no frames to retrieve from."""
