"""Exception types shared across the package."""


class OcctrackError(Exception):
    """Base class for all data errors raised by occtrack."""


class StreamFormatError(OcctrackError, ValueError):
    """A stream record, pose or feature does not match the expected layout."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class PlanningError(OcctrackError, ValueError):
    """The SIFP planner cannot place a valid object inside a chip."""


class EvaluationInputError(OcctrackError, ValueError):
    """Ground truth or hypotheses violate the evaluation preconditions."""


class ConfigError(OcctrackError, ValueError):
    """A configuration value is out of range or unknown."""
