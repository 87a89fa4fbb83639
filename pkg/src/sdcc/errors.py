"""Exception hierarchy.

Errors fall in three families that the command line maps to exit codes:
``UsageError`` (1), ``DataError`` (2) and ``NumericError`` (3).
All of them are also ``ValueError`` subclasses.
"""


class SdccError(ValueError):
    """Base class for every error raised by this package."""


class UsageError(SdccError):
    pass


class DataError(SdccError):
    pass


class NumericError(SdccError):
    pass


class InvalidArgument(UsageError):
    pass


class TTooLarge(UsageError):
    pass


# -- ingestion -------------------------------------------------------------

class MissingLabelColumn(DataError):
    pass


class RaggedRow(DataError):
    pass


class EmptyDataset(DataError):
    pass


class UnparseableValue(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DatasetNotFound(DataError):
    pass


class ManifestError(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class SchemaMismatch(DataError):
    pass


# -- coverage --------------------------------------------------------------

class ValueOutsideUniverse(DataError):
    pass


class TMismatch(DataError):
    pass


class FactorMismatch(DataError):
    pass


class EmptyReferenceSet(DataError):
    pass


# -- models and statistics ---------------------------------------------------

class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


class SingleClassSVM(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class TooFewSamples(DataError):
    pass


class DegenerateX(DataError):
    pass


class IncompleteReport(DataError):
    pass


class DomainError(NumericError):
    pass


class NonFiniteObjective(NumericError):
    pass


class DegenerateKernel(NumericError):
    pass


class SingleClassNoGradient(UserWarning):
    """Warning: one class only, so the NCA objective is flat."""
