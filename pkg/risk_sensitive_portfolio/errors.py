class RiskSensitiveError(Exception):
    """Base exception class for the solver and verification harness"""

    pass


class ModelError(RiskSensitiveError, ValueError):
    """A market parameter violates a model invariant"""

    pass


class ZeroVolatility(ModelError):
    pass


class RhoOutOfRange(ModelError):
    pass


class GammaZero(ModelError):
    pass


class DegenerateDenominator(ModelError):
    """(γ-1)(σ²+σ̄²) - 2ρσσ̄ vanishes"""

    pass


class NonpositiveHorizon(ModelError):
    pass


class NonpositiveMeanReversion(ModelError):
    pass


class NonpositiveWealth(ModelError):
    pass


class RiccatiError(RiskSensitiveError, ArithmeticError):
    """The Riccati closed form or its numerical integration is unavailable"""

    pass


class DeltaNonpositive(RiccatiError):
    pass


class DegenerateEll(RiccatiError):
    pass


class PoleOnInterval(RiccatiError):
    pass


class BlowupDetected(RiccatiError):
    pass


class PolicyError(RiskSensitiveError):
    pass


class NonconvexH(PolicyError):
    """The 𝓗-function is not strictly convex in u, so its stationary point is no minimizer"""

    pass


class SimulationError(RiskSensitiveError):
    pass


class WealthNonpositive(SimulationError):
    pass


class SweepError(RiskSensitiveError):
    pass


class SkippedPoint(SweepError):
    pass


class CliError(RiskSensitiveError):
    pass


class ConfigParse(CliError):
    pass


class UnknownSubcommand(CliError):
    pass


class OutputUnwritable(CliError):
    pass
