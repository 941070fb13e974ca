"""Exception types shared across the package."""


class WrongSolverError(ValueError):
    """A pair problem was handed to the solver for the other regularization regime."""


class DivergenceError(RuntimeError):
    """Channel prices left the guard region; the run was aborted."""


class OracleSizeError(ValueError):
    """Instance is too large for the brute-force primal oracle."""


class CapacityViolationError(RuntimeError):
    """A flow stayed infeasible even after a channel reset to half capacity."""


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""
