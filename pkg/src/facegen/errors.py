"""Exception hierarchy shared by every facegen module."""


class FacegenError(Exception):
    """Base class for all errors raised by this package."""


class PersistenceError(FacegenError):
    """Filesystem write/read failed; carries the offending path."""

    def __init__(self, path, message):
        super().__init__(f"{message}: {path}")
        self.path = str(path)


class CorruptDatasetError(FacegenError):
    """Dataset files are inconsistent with the manifest or each other."""


class CorruptModelError(FacegenError):
    """Model file header and payload disagree, or the payload is truncated."""


class FormatVersionError(FacegenError):
    """Persisted file declares a format version this code does not know."""


class InvalidLatentError(FacegenError):
    """A latent vector has the wrong length or non-finite entries."""


class EmptyDescriptionError(FacegenError):
    """Description text normalizes to zero tokens."""


class BackendUnavailableError(FacegenError):
    """An external adapter (generator, captioner, encoder) is missing or failed."""


class ConfigurationError(FacegenError):
    """A config object violates its invariants."""


class ShapeError(FacegenError):
    """Tensor or vector dimensions do not match the declared architecture."""


class EmptyBatchError(FacegenError):
    """A loss or gradient was requested for an empty batch."""


class TrainingDivergedError(FacegenError):
    """Non-finite gradients or weights appeared during training."""

    def __init__(self, tensor_name, context=""):
        detail = f" ({context})" if context else ""
        super().__init__(f"non-finite values in tensor {tensor_name!r}{detail}")
        self.tensor_name = tensor_name


class InvalidSplitError(FacegenError):
    """Requested train/test split would leave one side empty."""


class EmptySplitError(FacegenError):
    """Evaluation was requested on an empty split side."""


class UndefinedScoreError(FacegenError):
    """match_score called with no constraints to score against."""


class InvalidRequestError(FacegenError):
    """Variant request parameters out of bounds."""


class SessionNotFoundError(FacegenError):
    """No session with the given id exists."""


class SessionClosedError(FacegenError):
    """Mutation attempted on a closed session."""


class InvalidSelectionError(FacegenError):
    """Variant selection index does not address an existing variant."""
