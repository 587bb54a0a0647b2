"""
Exception hierarchy for the key-rate simulator
Every error raised by the library derives from CKAError
"""

from typing import List, Optional, Tuple


class CKAError(Exception):
    """Base exception for simulator errors"""
    pass


class ParameterError(CKAError, ValueError):
    """Exception for arguments outside an operation's domain"""
    pass


class NumericalToleranceError(CKAError):
    """Exception for integrations that could not reach the requested tolerance"""

    def __init__(self, message: str, estimate=None, error_estimate: Optional[float] = None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


class UndefinedObservableError(CKAError):
    """Exception for conditional observables whose condition has zero probability"""
    pass


class ConfigError(CKAError):
    """Exception for invalid run configuration or malformed result files"""

    def __init__(self, message: str, problems: Optional[List[Tuple[Optional[int], str, str]]] = None):
        super().__init__(message)
        # (line number or None, field name, message)
        self.problems = problems or []

    def describe(self) -> str:
        """Render one diagnostic line per problem"""
        if not self.problems:
            return str(self)
        lines = []
        for line, field, message in self.problems:
            where = f"line {line}" if line is not None else "config"
            lines.append(f"{where}: {field}: {message}")
        return "\n".join(lines)


class ValidationFailure(CKAError):
    """Exception for oracle checks that did not pass"""
    pass
