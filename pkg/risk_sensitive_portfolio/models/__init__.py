from .config import RunConfig, RunManifest
from .market import MarketParams, StatePoint
from .policy import AdjointTriple, MinimizerReport
from .riccati import RiccatiCoeffs, ValueFunctions
from .simulation import Estimate, Measure, PathEnsemble, SimConfig
from .sweep import SweepAxis, SweepResult, SweepRow, SweepSpec
from .verification import VerificationReport

__all__ = [
    "AdjointTriple",
    "Estimate",
    "MarketParams",
    "Measure",
    "MinimizerReport",
    "PathEnsemble",
    "RiccatiCoeffs",
    "RunConfig",
    "RunManifest",
    "SimConfig",
    "StatePoint",
    "SweepAxis",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "ValueFunctions",
    "VerificationReport",
]
