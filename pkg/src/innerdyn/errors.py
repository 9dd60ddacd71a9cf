"""Exception types shared across modules."""


class NumericalFailure(RuntimeError):
    """A numerical procedure did not reach its tolerance."""


class ConvergenceError(NumericalFailure):
    pass


class RootSolverError(ConvergenceError):
    pass


class EssentialSingularity(ValueError):
    """Evaluation requested at a declared singularity of the map."""

    def __init__(self, point, message=None):
        self.point = point
        super().__init__(message or f"essential singularity at {point!r}")


class CriticalValueError(ValueError):
    """Preimage requested at (or near) a critical value."""

    def __init__(self, value, points):
        self.value = value
        self.points = list(points)
        super().__init__(f"{value!r} is a critical value (multiple preimage)")


class BranchObstruction(NumericalFailure):
    """Continuation of an inverse branch failed near a critical point."""

    def __init__(self, location, nearest_critical=None, depth=None):
        self.location = location
        self.nearest_critical = nearest_critical
        self.depth = depth
        msg = f"branch obstruction at {location!r}"
        if nearest_critical is not None:
            msg += f" (nearest critical point {nearest_critical!r})"
        super().__init__(msg)


class NotApplicable(ValueError):
    """The operation's precondition on the map type is not met."""
