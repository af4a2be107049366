"""Exception types shared across the toolkit."""


class MorphforgeError(Exception):
    """Base class for toolkit errors."""


class ProviderError(MorphforgeError):
    """Base class for inference-provider failures."""


class CapabilityError(ProviderError):
    """Provider does not declare the requested capability."""


class TransportError(ProviderError):
    """Provider unreachable or returned a malformed response after retries."""


class NoFaceError(ProviderError):
    """Provider could not find a face in the submitted image."""


class ArtifactNotFoundError(ProviderError):
    """File provider has no precomputed artifact for the given key."""

    def __init__(self, key: str):
        super().__init__(f"artifact not found: {key}")
        self.key = key
