"""
Error hierarchy for Qtomo.
Every error carries a machine-readable class name and optional context.
"""

from typing import Any, Dict, List, Optional


class QtomoError(Exception):
    """Base class for all library errors."""
    
    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context: Dict[str, Any] = dict(context or {})
    
    @property
    def error_class(self) -> str:
        return type(self).__name__
    
    def to_document(self) -> Dict[str, Any]:
        """Machine-readable form used by the CLI."""
        return {
            "error": self.error_class,
            "message": str(self),
            "context": self.context,
        }


class ConfigError(QtomoError):
    """Invalid document or scenario configuration."""


# ============= Network =============

class NetworkError(QtomoError):
    """Invalid network topology or parameters."""


class DisconnectedGraph(NetworkError):
    pass


class DuplicateLink(NetworkError):
    pass


class SelfLoop(NetworkError):
    pass


class UnknownNode(NetworkError):
    pass


class WernerOutOfRange(NetworkError):
    pass


class NotAStar(NetworkError):
    pass


# ============= QFI =============

class QfiError(QtomoError):
    """Errors raised by the Fisher-information mathematics."""


class DomainError(QfiError):
    pass


class ModeArityMismatch(QfiError):
    pass


class EmptyProbeSet(QfiError):
    pass


class SingularQfim(QfiError):
    """Some link parameters are not estimable from the probe set."""
    
    def __init__(self, message: str, links: List[int]):
        super().__init__(message, {"links": list(links)})
        self.links = list(links)


# ============= Placement model and solver =============

class ModelError(QtomoError):
    """The placement model cannot be built for the requested parameters."""


class CapacityInfeasible(ModelError):
    pass


class TooManyMonitors(ModelError):
    pass


class SolverError(QtomoError):
    """The solver could not produce a provably optimal plan."""


class Infeasible(SolverError):
    pass


class BudgetExhausted(SolverError):
    """A node or time limit fired; `incumbent` is the best plan found, if any."""
    
    def __init__(self, message: str, incumbent: Any = None, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, context)
        self.incumbent = incumbent


class PartitionInfeasible(QtomoError):
    pass


# ============= Estimation and reports =============

class EstimationError(QtomoError):
    pass


class DegenerateLikelihood(EstimationError):
    pass


class ReportError(QtomoError):
    pass


class MissingReport(ReportError):
    pass
