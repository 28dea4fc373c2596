"""Exception hierarchy shared by all modules."""


class VortexError(Exception):
    """Base class for all errors raised by vortexlab."""


class Collision(VortexError):
    """Two vortices came closer than the collision threshold."""


class ZeroVector(VortexError):
    """A vector that has to be normalized onto the sphere is (numerically) zero."""


class NonTimelike(VortexError):
    """A vector that has to be normalized onto the hyperboloid is not future timelike."""


class NotARotation(VortexError):
    pass


class Infeasible(VortexError):
    """The requested constraints cannot be met by a valid vortex configuration."""


class SolverDiverged(VortexError):
    """The fixed-point iteration of an implicit step did not converge."""


class IncompatibleMethod(VortexError):
    pass


class ConfigError(VortexError):
    """Invalid scenario document.

    ``reason`` names the underlying failure class (for example ``"Infeasible"``
    or ``"IncompatibleMethod"``) so callers can map it to an exit code.
    """

    def __init__(self, message, *, reason="ConfigError", line=None, key=None):
        self.reason = reason
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
