"""Exception types shared across the package."""


class MapNbvError(Exception):
    """Base class for package-specific failures."""


class ConfigError(MapNbvError):
    """Run configuration file is malformed or fails schema validation."""


class MeshParseError(MapNbvError):
    """A mesh file could not be parsed; message carries file/line context."""


class DegenerateMeshError(MapNbvError):
    """Mesh has no sampleable surface area."""


class PlanningFailure(MapNbvError):
    """A point-to-point plan could not be found within the iteration budget."""


class PlannerStuck(MapNbvError):
    """No feasible viewpoint tuple exists for the team this step."""


class SetupError(MapNbvError):
    """Episode preconditions violated (bad spawn poses or empty initial view)."""
