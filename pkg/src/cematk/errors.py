"""Exception types shared across the package."""


class CematkError(Exception):
    """Base class for toolkit errors."""


class ConfigError(CematkError):
    """Malformed or incomplete configuration input."""


class TraceFileError(CematkError):
    """Base class for trace-file format errors."""


class TraceFileMagicError(TraceFileError):
    """File does not start with the CEMT magic."""


class TraceFileVersionError(TraceFileError):
    """Unsupported trace-file format version."""


class TraceFileLengthError(TraceFileError):
    """File length inconsistent with the header's trace geometry."""


class AmbiguousKeyError(CematkError):
    """Full-key search matched more than one candidate."""
