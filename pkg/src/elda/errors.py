"""Exception hierarchy shared by every module."""


class EldaError(Exception):
    """Base class for all errors raised by this package."""


class EmptyCorpusError(EldaError, ValueError):
    pass


class MalformedInputError(EldaError, ValueError):
    pass


class FormatError(EldaError, ValueError):
    """An artifact file does not follow its declared format."""


class DimensionMismatchError(FormatError):
    pass


class NormalizationError(EldaError, ValueError):
    def __init__(self, row, total):
        super().__init__(f"topic row {row} sums to {total:.9g}, expected 1")
        self.row = row
        self.total = total


class BudgetError(EldaError, ValueError):
    """Link budget is inconsistent with the ground set or the corpus."""


class MissingLinkError(EldaError, ValueError):
    pass


class DuplicateLinkError(EldaError, ValueError):
    pass


class CertificationError(EldaError, RuntimeError):
    pass
