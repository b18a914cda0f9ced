"""Exception types shared across the toolkit."""


class SdrError(Exception):
    """Base class for all toolkit errors."""


class FormatError(SdrError, ValueError):
    """Malformed byte stream, capture file, or WAV file."""


class ConfigError(SdrError, ValueError):
    """Invalid or inconsistent configuration (sidecar, scene, chain parameters)."""


class StateError(SdrError, RuntimeError):
    """Operation not allowed in the current session state."""
