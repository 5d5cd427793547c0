"""Exception hierarchy. Everything raised on purpose derives from CellallocError
so callers can catch library failures without swallowing programming errors."""


class CellallocError(Exception):
    """Base class for all cellalloc errors."""


class DomainError(CellallocError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class SolverError(CellallocError, RuntimeError):
    """A root-finding bracket could not be established or refined; usually a
    degenerate scenario (for example a budget below the total rate floor)."""


class OracleSizeError(CellallocError, ValueError):
    """The exhaustive grid oracle refused an instance that exceeds its size caps."""


class ScenarioParseError(CellallocError, ValueError):
    """Scenario text is malformed. Carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
