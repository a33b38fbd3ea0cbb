# errors.py
"""
Exception family for the energy-estimation pipeline.

Everything raised on purpose derives from PipelineError, so the command line
can map a failure to its exit code without string matching.
"""


class PipelineError(Exception):
    """Base class for every deliberate pipeline failure."""


# ---------------------------------------------------------------------------
# Input / validation
# ---------------------------------------------------------------------------

class HamiltonianParseError(PipelineError, ValueError):
    """A Hamiltonian document (or Pauli input) could not be accepted."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class LengthMismatch(HamiltonianParseError):
    pass


class InvalidAxisChar(HamiltonianParseError):
    pass


class DuplicateString(HamiltonianParseError):
    pass


class MalformedNumber(HamiltonianParseError):
    pass


class ImaginaryCoefficient(HamiltonianParseError):
    pass


class ConfigError(PipelineError, ValueError):
    """Bad run configuration (file grammar, unknown key, out-of-range value)."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SymmetryViolation(PipelineError, ValueError):
    pass


class ParityViolation(PipelineError, ValueError):
    pass


class MismatchedQubitCount(PipelineError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

class SimulationError(PipelineError, RuntimeError):
    pass


class DimensionTooLarge(SimulationError, ValueError):
    pass


class LeakageUnsupported(SimulationError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

class EstimationError(PipelineError, ArithmeticError):
    pass


class EmptyAfterSelection(EstimationError):
    pass


class DegenerateRatio(EstimationError):
    pass


class DivisionByNearZero(EstimationError):
    pass
