"""Exception types shared across the pipeline."""


class WebsiftError(Exception):
    """Base class for all pipeline errors."""


class SchemaError(WebsiftError):
    """Input columns, label tokens or a vocabulary manifest do not match."""


class DataError(WebsiftError):
    """Numeric input is unusable (non-finite values, wrong shapes)."""


class ParameterError(WebsiftError):
    """A hyperparameter is outside its legal range."""


class ProtocolError(WebsiftError):
    """The evaluation protocol cannot be run on this data."""


class LeakageError(ProtocolError):
    """A test-fold index was used while fitting a pipeline step."""


class TrainingError(WebsiftError):
    """A learner failed while fitting."""
