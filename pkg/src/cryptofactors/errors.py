"""Exception types shared across the package."""


class ParseError(ValueError):
    """A data file is malformed; the message carries file/row/column context."""


class RankDeficiencyError(ValueError):
    """The regression design matrix does not have full column rank.

    Columns that are linear combinations of the preceding ones are listed
    in ``columns`` so the caller can amend the factor roster.
    """

    def __init__(self, message: str, columns: tuple = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class InsufficientCrossSectionError(ValueError):
    """Too few assets on a regression day relative to the factor count."""


class DegenerateSeriesError(ValueError):
    """A factor-return series has zero variance, so its t-statistic is undefined."""


class ConstructionError(ValueError):
    """A synthetic-panel configuration cannot be realized as positive prices."""
