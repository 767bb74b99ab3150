"""Exception types raised across the package."""


class MultiFitError(Exception):
    """Base class for every multifit-specific error."""


class ColumnSelectorError(MultiFitError):
    """A column selector could not be resolved against the file header."""


class OverlappingSelectorsError(ColumnSelectorError):
    """The X and Y selectors share at least one column."""


class NonNumericColumnError(MultiFitError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} contains non-numeric values")


class MissingValueError(MultiFitError):
    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f"missing value at row {row}, column {column!r}")


class NonFiniteValueError(MultiFitError):
    def __init__(self, row: int, column):
        self.row = row
        self.column = column
        super().__init__(f"non-finite value at row {row}, column {column!r}")


class EmptyAfterDropError(MultiFitError):
    """Dropping rows with missing values removed every row."""


class DimensionNotInBlockError(MultiFitError):
    """A face was requested for (i, j) where i is not an X dim or j not a Y dim."""


class BudgetExceededError(MultiFitError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(
            f"exhaustive work would need {count} units, over the budget of {budget}"
        )


class InconsistentMarginsError(MultiFitError):
    """Row totals and column totals of a 2x2 table disagree."""


class EmptyInputError(MultiFitError):
    """A correction was asked to adjust an empty p-value list."""


class MissingSupportError(MultiFitError):
    """The discrete correction needs attainable supports that are absent."""


class DegenerateConfigError(MultiFitError):
    """Engine configuration is internally inconsistent (e.g. r_max < r_star)."""


class EmptySampleError(MultiFitError):
    """The engine needs at least two observations."""


class UnknownScenarioError(MultiFitError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown scenario {name!r}")


class NoiseLevelOutOfRangeError(MultiFitError):
    def __init__(self, level):
        self.level = level
        super().__init__(f"noise level must be an integer in 1..20, got {level!r}")
