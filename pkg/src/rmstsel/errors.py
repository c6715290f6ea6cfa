"""Exception hierarchy.

Two base classes matter for the CLI: :class:`DataError` maps to exit code 2
(bad input / usage), :class:`NumericError` maps to exit code 3 (estimation or
numerical failure).
"""


class RmstselError(Exception):
    """Base class for all package-specific errors."""


class DataError(RmstselError):
    """Invalid input data or usage; CLI exit code 2."""


class NumericError(RmstselError):
    """Estimation or numerical failure; CLI exit code 3."""


# --- data ingestion ---------------------------------------------------------

class MalformedRow(DataError):
    def __init__(self, line_no, detail=""):
        self.line_no = line_no
        msg = f"malformed row at line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NonPositiveTime(DataError):
    def __init__(self, line_no, value=None):
        self.line_no = line_no
        msg = f"non-positive follow-up time at line {line_no}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class InvalidArm(DataError):
    def __init__(self, line_no, value=None):
        self.line_no = line_no
        msg = f"arm must be 0 or 1 at line {line_no}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class InvalidEvent(DataError):
    def __init__(self, line_no, value=None):
        self.line_no = line_no
        msg = f"event indicator must be 0 or 1 at line {line_no}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class ArmMissing(DataError):
    """An arm has fewer than 2 subjects."""


class EmptyArm(DataError):
    """Kaplan-Meier fit requested on an arm with no records."""


class EmptyInput(DataError):
    """Aggregation requested over an empty record set."""


# --- estimation -------------------------------------------------------------

class BeyondFollowUp(NumericError):
    """Evaluation time exceeds the curve's maximum follow-up."""


class NotEstimable(NumericError):
    """Restriction time exceeds the largest L at which both arms are estimable."""


class DegenerateRiskSet(NumericError):
    """A Y = d event time contributes an ill-defined variance term."""


class NoEstimablePoint(NumericError):
    """Every candidate restriction time maps to -inf."""


class TooFewSubjects(NumericError):
    """Grid-size rule requires n >= 16."""


class FoldTooSmall(NumericError):
    """A fold retains fewer than 2 subjects in some arm."""


class TooManyDegenerateResamples(NumericError):
    """More than 5% of bootstrap resamples were unestimable."""


class NoEvents(NumericError):
    """A rank test needs at least one observed event."""


class SingularCorrelation(NumericError):
    """Component correlation matrix is not positive definite."""


class QuadratureFailure(NumericError):
    """Adaptive quadrature did not converge to the requested tolerance."""


class NonUniqueMaximizer(NumericError):
    """The true criterion has no unique maximizer on the interval."""
