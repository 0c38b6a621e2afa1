class CasimirError(Exception):
    code = "E_CASIMIR"


class ParameterDomainError(CasimirError, ValueError):
    code = "E_DOMAIN"


class TruncationError(CasimirError):
    code = "E_TRUNC"

    def __init__(self, message, value=None, reference=None):
        super().__init__(message)
        self.value = value
        self.reference = reference


class QuadratureError(CasimirError):
    code = "E_QUAD"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PropagationError(CasimirError):
    code = "E_PROP"


class ConvergenceError(CasimirError):
    code = "E_CONV"

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class ConsistencyError(CasimirError):
    code = "E_CONSIST"


class RouteError(CasimirError):
    """Route not applicable to the scenario (e.g. barton at T > 0)."""

    code = "E_ROUTE"


class ConfigError(CasimirError):
    code = "E_CONFIG"

    def __init__(self, violations):
        # violations: list of (line, key, message)
        self.violations = list(violations)
        lines = [
            f"line {line}: {key}: {message}" if line else f"{key}: {message}"
            for line, key, message in self.violations
        ]
        super().__init__("\n".join(lines))


def error_code(exc: BaseException) -> str:
    return getattr(exc, "code", "E_EXEC")
