"""Exception hierarchy shared by the audio, dsp and watermark packages."""


class WatermarkError(Exception):
    """Base class for every error raised by this project."""


class InvalidInputError(WatermarkError, ValueError):
    pass


class FormatError(WatermarkError, ValueError):
    """Audio or sidecar content that cannot be decoded."""


class MissingFileError(FormatError, FileNotFoundError):
    pass


class SidecarError(FormatError):
    pass


class VersionError(SidecarError):
    pass


class CapacityError(WatermarkError):
    def __init__(self, k: int, k_max: int, mode: str):
        self.k = k
        self.k_max = k_max
        self.mode = mode
        super().__init__(
            f"Payload of {k} samples exceeds {mode} capacity of {k_max} samples"
        )


class PayloadOverflowError(WatermarkError, ValueError):
    pass


class ExtractionIntegrityError(WatermarkError):
    pass


class EmbeddingIntegrityError(WatermarkError):
    """Embedding produced a carrier that cannot be stored as requested."""


class UndefinedSNRError(WatermarkError, ValueError):
    pass


class UndefinedCorrelationError(WatermarkError, ValueError):
    pass
