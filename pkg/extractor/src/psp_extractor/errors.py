class ExtractorError(Exception):
    pass


class DecodeFailure(ExtractorError):
    pass


class ModelLoadFailure(ExtractorError):
    pass


class HopMismatch(ExtractorError):
    pass
