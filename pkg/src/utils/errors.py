"""
Exception hierarchy

DataError covers anything wrong with input data (exit code 2 on the CLI),
ConfigError covers invalid configuration and usage (exit code 1).
"""


class CdrError(Exception):
    """Base class for all toolkit errors"""


class DataError(CdrError, ValueError):
    """Malformed or inconsistent input data"""


class ConfigError(CdrError, ValueError):
    """Invalid configuration or command usage"""


class VocabError(DataError):
    """Vocabulary file or token lookup problem"""


class TagError(DataError):
    """Unbalanced or nested named-entity tags"""


class ArpaError(DataError):
    """Malformed ARPA language model file"""


class ObservationError(DataError):
    """Observation key unknown to an E2E emulator"""


class PoolError(DataError):
    """Name pool too small for the requested sample"""


class SearchSpaceError(DataError):
    """Enumeration or exhaustive search space too large"""


class StaleStateError(CdrError, RuntimeError):
    """Contextual scoring requested with an open span but no NE state"""


def error_kind(error: Exception) -> str:
    """'usage', 'data' or 'internal'; controllers report it, the CLI maps it to an exit code"""
    if isinstance(error, ConfigError):
        return 'usage'
    if isinstance(error, DataError):
        return 'data'
    return 'internal'
