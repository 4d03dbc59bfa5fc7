class ImageStarError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ImageStarError, ValueError):
    pass


class ShapeError(ImageStarError, ValueError):
    pass


class EmptySetError(ImageStarError):
    """An operation needed a point of a set whose predicate is infeasible."""


class EmptyInput(EmptySetError):
    pass


class BudgetExceeded(ImageStarError):
    """Exact reachability produced more stars than the configured cap."""

    def __init__(self, count, budget, layer_index=None):
        self.count = count
        self.budget = budget
        self.layer_index = layer_index
        where = "" if layer_index is None else f" at layer {layer_index}"
        super().__init__(f"{count} stars exceed the budget of {budget}{where}")


class WitnessMappingFailed(ImageStarError):
    pass


class ParseError(ImageStarError, ValueError):
    pass


class NoAttackedPixelsWarning(UserWarning):
    """An attack selected no pixels; the resulting set is a single image."""
