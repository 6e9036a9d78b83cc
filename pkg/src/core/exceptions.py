"""Custom exception classes - carry a short message plus optional details"""


class ToolkitException(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, message: str, details: str = ""):
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if self.details:
            return f"{self.message}: {self.details}"
        return self.message


class ValidationError(ToolkitException):
    """A domain object violates one of its invariants"""
    pass


class IngestionError(ToolkitException):
    """A source row could not be turned into a problem record"""

    def __init__(self, message: str, details: str = "", row: int | None = None):
        self.row = row
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message, details)


class ConfigError(ToolkitException):
    """Invalid or incomplete configuration"""
    pass


class ModelError(ToolkitException):
    """Behavioral model lookup or evaluation error"""
    pass


class FitError(ToolkitException):
    """Parameter fitting could not produce a result"""
    pass


class ScoringError(ToolkitException):
    """Inverse preference scoring error"""
    pass


class MetricError(ToolkitException):
    """Ranking or correlation could not be computed"""
    pass


class AgentException(ToolkitException):
    """Base class for agent transport errors"""
    pass


class AgentConnectionError(AgentException):
    """Endpoint unreachable"""
    pass


class AgentTimeoutError(AgentException):
    """Endpoint did not answer within the request timeout"""
    pass


class AgentAuthError(AgentException):
    """Endpoint rejected the credentials"""
    pass


class AgentQuotaError(AgentException):
    """Endpoint rate limit or quota exhausted"""
    pass


class AgentResponseError(AgentException):
    """Endpoint answered with a payload we cannot read"""
    pass


class ExperimentError(ToolkitException):
    """An experiment run could not complete"""

    def __init__(self, message: str, details: str = "", partial_record: str | None = None):
        self.partial_record = partial_record
        super().__init__(message, details)


class RunLockedError(ExperimentError):
    """Another experiment holds the output directory"""
    pass
