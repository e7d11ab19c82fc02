"""Exception types shared across the package."""

import numpy as np


class SpecError(ValueError):
    """An architecture spec or scaling coefficient is invalid."""


class SamplingError(RuntimeError):
    """Rejection sampling ran out of draws before filling the request."""


class IngestError(ValueError):
    """A record CSV row is malformed or conflicts with the store."""


class MissingAccuracyError(ValueError):
    """Records without a measured accuracy were passed to a ranking step."""

    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__("records without accuracy: " + ", ".join(self.ids))


class ConditioningError(np.linalg.LinAlgError):
    """The GP Gram matrix could not be factorized even with maximal jitter."""


class BudgetError(ValueError):
    """A FLOPs reduction factor lies outside the admissible interval."""
