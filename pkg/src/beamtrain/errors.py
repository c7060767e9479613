"""Exception types raised by beamtrain."""


class BeamTrainError(Exception):
    """Base class for all library errors."""


class GeometryDomainError(BeamTrainError, ValueError):
    """A point lies where the spherical-wave model is undefined."""


class ConfigError(BeamTrainError, ValueError):
    """Invalid configuration value.

    ``path`` names the offending field (``"scene.L"``) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DimensionError(BeamTrainError, ValueError):
    """Array shapes do not agree."""
