"""Exception hierarchy for simulation-level failures."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateGeometryError(SimulationError):
    """Satellite and receiver positions coincide or a frame is undefined."""


class SingularGeometryError(SimulationError):
    """Normal matrix is singular (too few or coplanar lines of sight)."""


class InsufficientSatellitesError(SimulationError):
    """Fewer satellites than the operation requires."""


class InsufficientReceiversError(SimulationError):
    """A receiver-receiver exchange needs at least two receivers in range."""


class ConvergenceError(SimulationError):
    """Iterative solver did not converge within the iteration budget."""


class DegenerateClockError(SimulationError):
    """Clock parameters outside the model's validity range."""


class ConfigurationError(SimulationError):
    """Inconsistent or incomplete configuration supplied to a simulator."""


class EmptyInputError(SimulationError):
    """An operation that requires data received an empty input."""


class EmptyResultError(SimulationError):
    """Valid inputs produced no output (e.g. window longer than the series)."""


class UndefinedRequirementError(SimulationError):
    """Requirement calculator invoked with parameters that make it undefined."""


class ScenarioValidationError(SimulationError):
    """Scenario failed validation; carries the full list of violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
