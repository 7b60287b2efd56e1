class AdapterError(Exception):
    """Base for all adapter failures."""


class RequestError(AdapterError):
    """Client sent something unusable; maps to HTTP 400."""


class InferenceError(AdapterError):
    """Pipeline failed while generating; maps to HTTP 500."""


class ModelLoadError(AdapterError):
    """Model assets could not be loaded; the server refuses to start."""
