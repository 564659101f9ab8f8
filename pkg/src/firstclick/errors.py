"""Exception hierarchy shared by all modules."""


class ConfigurationError(ValueError):
    """Invalid grid, detector, window or propagator configuration."""


class PacketEscapesGrid(ConfigurationError):
    """A wave packet is not numerically supported inside the spatial grid."""


class ConfigParseError(ConfigurationError):
    """A run configuration file is malformed; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class PhysicsConsistencyError(RuntimeError):
    """A numerical invariant that must hold on a correct build was violated."""


class WrapAroundError(PhysicsConsistencyError):
    """Amplitude reached the periodic seam of the transform domain."""


class ConservationError(PhysicsConsistencyError):
    """Click weights plus survival probability do not sum to one."""


class DetectorNotReached(RuntimeError):
    """The particle never has appreciable probability inside the detector."""
