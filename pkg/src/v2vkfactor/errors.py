"""Exception types shared across the package."""


class DegenerateInputError(ValueError):
    """Input is well-formed but carries no usable signal (e.g. zero power)."""


class FormatError(ValueError):
    """A serialized artifact has a bad magic, header or payload size."""
