"""Exception types shared across the package."""


class InvalidWeights(ValueError):
    """Weights are all zero, negative or non-finite."""


class InvalidTolerance(ValueError):
    """A tolerance argument is not strictly positive."""


class InvalidLaw(ValueError):
    """A law violates its structural invariants."""


class InvalidSample(ValueError):
    """A sample has the wrong shape for the statistic."""


class TooLarge(RuntimeError):
    """An enumeration would exceed its tuple budget."""


class NotClassifiable(ValueError):
    """A torus law has no exact description, so its case is undecidable."""


class MixedModeError(TypeError):
    """Exact and floating torus points were combined."""


class LevelViolation(Exception):
    """No admissible schedule value was found for a rank.

    This is a finding about the test, not a crash: the test appears to
    exceed ``alpha + 1/rank`` along the searched range.
    """

    def __init__(self, rank, m, value, bound=None):
        self.rank = rank
        self.m = m
        self.value = value
        self.bound = bound
        msg = f"rank {rank}: expectation {value:.6g} at m={m}"
        if bound is not None:
            msg += f" exceeds bound {bound:.6g}"
        super().__init__(msg)

    def to_json(self):
        return {
            "finding": "level_violation",
            "rank": self.rank,
            "m": self.m,
            "value": self.value,
            "bound": self.bound,
        }


class VerificationFailure(Exception):
    """A measured expectation exceeds its three-term bound."""

    def __init__(self, rank, bounds=None):
        self.rank = rank
        self.bounds = bounds or []
        super().__init__(f"three-term bound violated at rank {rank}")

    def to_json(self):
        return {"finding": "verification_failure", "rank": self.rank}
