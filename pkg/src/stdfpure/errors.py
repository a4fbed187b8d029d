"""Exception hierarchy. The CLI maps these onto exit codes."""


class StdfError(Exception):
    """Base class for all package errors."""


class ParameterError(StdfError, ValueError):
    """A tuning or model parameter is outside its admissible range."""


class InputError(StdfError, ValueError):
    """Malformed input data (shape, non-finite entries, negative arguments)."""


class AlignmentError(InputError):
    """Two loading matrices cannot be column-aligned."""


class GenerationError(StdfError, RuntimeError):
    """Synthetic generation could not satisfy its constraints."""
