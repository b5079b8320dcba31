"""Root exception for kdilation."""


class KDilationError(Exception):
    """Base class for every error raised by kdilation."""
