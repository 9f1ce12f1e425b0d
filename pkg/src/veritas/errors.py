"""Exception hierarchy shared across the toolkit.

Every error raised by library code derives from :class:`VeritasError` so
callers can catch one base class at pipeline boundaries.
"""


class VeritasError(Exception):
    """Base class for all toolkit errors."""


# -- geometry / array contract violations -----------------------------------

class ZeroDimension(VeritasError):
    """An image, heatmap, or patch dimension is zero."""


class ShapeMismatch(VeritasError):
    """An array does not have the shape a contract requires."""


class DimMismatch(VeritasError):
    """Two vectors or arrays that must agree in dimension do not."""


class PatchOutOfBounds(VeritasError):
    """A patch rectangle extends beyond its parent image."""


class NonDyadicDims(VeritasError):
    """Wavelet input dims are not powers of two and padding is disabled."""


# -- voting / scoring --------------------------------------------------------

class NoRelevantPatches(VeritasError):
    """Every patch voted neutral (or carried zero weight): the artifact is
    inapplicable to this image, which is distinct from evidence of realness."""


# -- backends ----------------------------------------------------------------

class BackendUnavailable(VeritasError):
    """A requested model backend is not installed or failed to load.

    ``stage`` names the pipeline stage that needed the backend, when known.
    """

    def __init__(self, message: str, stage: str | None = None):
        self.stage = stage
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)


class GradientsUnsupported(VeritasError):
    """The backend cannot provide gradients or saliency tensors."""


class UnsupportedFactor(VeritasError):
    """The super-resolver does not support the requested upscale factor."""


class GenerationTimeout(VeritasError):
    """A vision-language backend did not answer within its time budget."""


# -- ensemble ----------------------------------------------------------------

class AllZeroWeights(VeritasError):
    """Raw ensemble weights sum to zero and cannot be normalized."""


class EmptyValidationSet(VeritasError):
    """Weight search was given no validation samples."""


# -- metric-learning losses --------------------------------------------------

class EmptyPairList(VeritasError):
    """Contrastive loss was given no pairs."""


class EmptyTripletList(VeritasError):
    """Triplet loss was given no triplets."""


class NoPositivePairs(VeritasError):
    """No anchor in the batch has a same-label partner."""


# -- descriptor library / explanations ---------------------------------------

class ParseError(VeritasError):
    """A descriptor library file could not be parsed."""


class DuplicateArtifactName(VeritasError):
    """Two descriptors in one library share a name."""


class MissingTupleField(VeritasError):
    """A descriptor record is missing one of its required fields."""


class MalformedResponse(VeritasError):
    """A VLM response held no valid explanation JSON."""


class ArtifactMismatch(VeritasError):
    """A VLM response named an artifact that is not in the active library."""


# -- datasets ----------------------------------------------------------------

class NoSuchDirectory(VeritasError):
    """A dataset root or required subdirectory does not exist."""


class EmptyDataset(VeritasError):
    """A dataset directory or table contains no usable entries."""
