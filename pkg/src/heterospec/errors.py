"""Exception types shared across the package.

The CLI maps each class to a distinct exit code, so raise the most
specific one available.
"""


class HeteroSpecError(Exception):
    """Base class for all package errors."""


class ConfigError(HeteroSpecError):
    """Invalid configuration, hyperparameter, or input precondition."""


class CalibrationError(HeteroSpecError):
    """Calibration produced no usable samples (carries diagnostic counts)."""


class BinsFileError(HeteroSpecError):
    """Malformed or inconsistent binning-model file."""


class OutputMismatchError(HeteroSpecError):
    """Paired decoding arms emitted different token sequences.

    Both controllers are greedy-exact, so this always signals a
    verification bug rather than bad luck.
    """
