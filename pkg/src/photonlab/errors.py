"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line can
report failures as a single parseable line.
"""


class PhotonLabError(Exception):
    code = "error"


class InvalidParameter(PhotonLabError, ValueError):
    code = "invalid-parameter"


class TruncationError(PhotonLabError):
    code = "truncation-too-small"


class UndefinedMoment(PhotonLabError, ZeroDivisionError):
    code = "undefined-moment"


class NoHeraldError(PhotonLabError):
    code = "no-herald"


class DetectorLatched(PhotonLabError):
    code = "detector-latched"


class InvalidState(PhotonLabError, ValueError):
    code = "invalid-state"


class ResolutionError(PhotonLabError):
    code = "resolution"


class DegenerateData(PhotonLabError):
    code = "degenerate-data"


class IllConditioned(PhotonLabError):
    code = "ill-conditioned"


class InconsistentData(PhotonLabError):
    code = "inconsistent-data"


class InvalidMaterial(PhotonLabError, ValueError):
    code = "invalid-material"


class MissingMaterial(PhotonLabError, KeyError):
    code = "missing-material"

    def __str__(self):
        return Exception.__str__(self)


class ConfigError(PhotonLabError):
    code = "config"


class TruncationWarning(UserWarning):
    pass


class FarBelowThresholdWarning(UserWarning):
    pass


class StagnantOptimization(UserWarning):
    pass
