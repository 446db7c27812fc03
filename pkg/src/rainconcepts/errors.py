"""Exception types shared across the pipeline."""


class RainconceptsError(Exception):
    """Base class for all pipeline errors."""


class RejectedFrameError(RainconceptsError):
    """A raw radar frame failed validation (non-finite values, bad header)."""


class ConfigurationError(RainconceptsError):
    """A configuration value is out of its documented range."""


class MissingArtifactError(RainconceptsError):
    """A required pipeline artifact (weights, store, probers, ...) is absent."""


class FrameGapError(RainconceptsError):
    """The 7-frame input sequence has a missing timestamp."""

    def __init__(self, missing_time):
        self.missing_time = missing_time
        super().__init__(f"missing frame at {missing_time.isoformat()}")


class AdapterError(RainconceptsError):
    """Model adapter received data inconsistent with its ModelSpec."""


class SkipConcept(RainconceptsError):
    """A concept cannot be trained (too few positive samples).

    Carries the observed positive count so callers can report it.
    """

    def __init__(self, concept_id: int, n_positives: int, minimum: int):
        self.concept_id = concept_id
        self.n_positives = n_positives
        self.minimum = minimum
        super().__init__(
            f"concept {concept_id}: {n_positives} positives < minimum {minimum}"
        )
