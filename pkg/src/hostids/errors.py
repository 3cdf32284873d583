"""Common exception base so callers can catch engine failures in one clause."""


class EngineError(Exception):
    """Base class for every error raised by this package."""
