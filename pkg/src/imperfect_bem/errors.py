"""Exception hierarchy shared by the solver modules."""


class ImperfectBEMError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(ImperfectBEMError, ValueError):
    """Invalid curve parameters, node counts, or overlapping boundaries."""


class ClearanceError(ImperfectBEMError, ValueError):
    """A field evaluation point lies too close to the boundary."""

    def __init__(self, point, distance, required):
        self.point = tuple(float(c) for c in point)
        self.distance = float(distance)
        self.required = float(required)
        super().__init__(
            f"point ({self.point[0]:.6g}, {self.point[1]:.6g}) is {self.distance:.3e} "
            f"from the boundary; clearance rule requires >= {self.required:.3e}"
        )


class CapacityGuardError(ImperfectBEMError, ValueError):
    """The single layer operator is (numerically) singular for this geometry."""


class ConfigError(ImperfectBEMError, ValueError):
    """Malformed or inconsistent experiment configuration."""
