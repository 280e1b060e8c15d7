"""Exception types shared across the package."""


class QInstrumentError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(QInstrumentError):
    """Operands act on spaces of different dimension."""


class NotSelfAdjoint(QInstrumentError):
    """Matrix expected to be self-adjoint is not (within tolerance)."""


class ValidationError(QInstrumentError):
    """A value violates a declared invariant; message names object and invariant."""


class ParseError(QInstrumentError):
    """A document could not be parsed; message carries location info."""


class UnknownOutcome(QInstrumentError, KeyError):
    """Outcome label not in the instrument's outcome set."""


class InvalidInstrument(QInstrumentError):
    """Instrument fails trace preservation or complete positivity."""


class ZeroProbabilityConditioning(QInstrumentError, ArithmeticError):
    """Conditioning on an outcome whose probability is below the floor."""


class NotBinaryOutcomes(QInstrumentError):
    """Operation requires exactly two outcomes (yes/no)."""


class BadWeights(QInstrumentError):
    """Weights are negative or do not sum to one."""


class BadParameters(QInstrumentError):
    """Model parameter vector is malformed."""


class BadParameterLength(BadParameters):
    """Parameter vector has the wrong length for the requested chart."""


class IncompatibleUnitaries(QInstrumentError):
    """Unitary fails to preserve the eigenspace it is attached to."""


class UnknownFamily(QInstrumentError, KeyError):
    """Search family identifier is not registered."""


class EmptyTable(QInstrumentError):
    """Contingency table has zero total count."""


class DegenerateVariance(QInstrumentError, ArithmeticError):
    """Estimated standard error is zero; z statistic undefined."""


class NegativeCount(QInstrumentError):
    """Contingency cell count is negative."""
