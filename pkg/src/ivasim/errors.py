"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(SimulationError):
    """Invalid static configuration: bad parameter values, malformed config files,
    transform sizes that violate the power-of-two contract."""


class DataError(SimulationError):
    """Invalid numeric payload: non-finite samples, empty/degenerate arrays,
    all-zero signals where an estimate is undefined."""


class GeometryError(SimulationError):
    """Degenerate geometry or kinematics: zero range, static target where the
    cross-range mapping is undefined."""


class SynthesisError(SimulationError):
    """Beam synthesis cannot meet the requested sector specification."""
