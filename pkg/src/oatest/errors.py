"""Exception hierarchy shared by the library and the command line."""


class OatError(Exception):
    """Base class for all errors raised by oatest."""


class ConfigError(OatError):
    """Invalid or inconsistent experiment configuration."""


class DataError(OatError):
    """Malformed, inconsistent or insufficient interaction data."""


class ExperimentError(OatError):
    """A per-student run failed; carries the student and test length."""

    def __init__(self, message, student_id=None, length=None):
        super().__init__(message)
        self.student_id = student_id
        self.length = length


class TrainingError(OatError):
    """Gradient training diverged (non-finite loss)."""
