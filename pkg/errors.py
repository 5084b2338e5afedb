"""
Exception hierarchy shared by every module
"""


class FeedbackUrnError(Exception):
    """Base class for all simulator and solver errors"""


class DomainError(FeedbackUrnError, ValueError):
    """Argument outside the supported domain"""


class UnsupportedClassificationError(FeedbackUrnError, ValueError):
    """Regime classification requested for a feedback function that cannot be classified"""


class NonExplosiveError(FeedbackUrnError, ValueError):
    """Explosion quantities requested for a non-explosive feedback function"""


class ConfigurationError(FeedbackUrnError, ValueError):
    """Invalid simulation or command configuration"""


class SimulationStateError(FeedbackUrnError, ValueError):
    """Operation not valid for the current simulation state"""


class DistinctnessError(FeedbackUrnError, ValueError):
    """Tied feedback values where the recursion needs distinct rates"""


class NumericalBreakdownError(FeedbackUrnError, ArithmeticError):
    """Result failed plausibility bounds after cancellation"""


class IntegrationError(FeedbackUrnError, ArithmeticError):
    """ODE integration failed (for example step-size underflow)"""


class DegenerateFitError(FeedbackUrnError, ValueError):
    """Fit is undefined for the given samples"""


class UsageError(ConfigurationError):
    """Malformed command-line or config value; reported as a usage error"""
