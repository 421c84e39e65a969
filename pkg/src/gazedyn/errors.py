"""Exception types shared across the pipeline.

Every error carries an ``exit_code`` so the CLI can map failures onto its
contract: 1 for I/O problems, 2 for input validation, 3 for numeric failures.
"""


class GazedynError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 2


# --- I/O (exit code 1) ---------------------------------------------------

class InputIOError(GazedynError):
    exit_code = 1


# --- validation (exit code 2) --------------------------------------------

class MalformedRow(GazedynError):
    """A CSV field could not be parsed or violates a field invariant."""


class NonMonotonicTime(GazedynError):
    """Timestamps are not strictly increasing where they must be."""


class EmptyFile(GazedynError):
    """An input that must contain data has none."""


class InvalidGoodness(GazedynError):
    """A goodness flag is neither 0 nor 1."""


class MissingTrack(GazedynError):
    """No track data covers a character at the time it is needed."""


class AmbiguousMatch(GazedynError):
    """A shot time falls inside two fixations; the fixation set is corrupt."""


class NoEndingFixations(GazedynError):
    """Separation-rate estimate needs at least one record flagged bad."""


class ZeroPeriod(GazedynError):
    """Rate estimate denominator (total fixation period) is zero."""


class EmptyInput(GazedynError):
    """An estimator was handed no records."""


class DegenerateData(GazedynError):
    """Damping estimate needs nonzero minimum distance and maximum speed."""


class ShapeMismatch(GazedynError):
    """Array arguments disagree with the network geometry."""


class InvalidConfig(GazedynError):
    """A run configuration value is missing or out of range."""


# --- numeric (exit code 3) -----------------------------------------------

class NumericError(GazedynError):
    exit_code = 3


class SingularState(NumericError):
    """A state variable reached the singular value 1 of the rate laws."""


class NonFinite(NumericError):
    """A computation produced NaN or infinity."""


class DivergedTraining(NumericError):
    """Training loss became non-finite."""


class InsufficientQuadrature(NumericError):
    """Doubling the quadrature resolution still moves the result."""
