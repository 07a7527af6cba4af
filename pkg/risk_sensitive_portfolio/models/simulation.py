from enum import Enum
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class Measure(str, Enum):
    P = "P"
    P_TILDE = "P_TILDE"


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_paths: int = Field(default=10_000, ge=1, description="Number of simulated paths")
    n_steps: int = Field(default=1000, ge=1, description="Euler steps on [0, T]")
    seed: int = Field(default=0, ge=0, lt=2**64, description="64-bit stream key")
    measure: Measure = Field(default=Measure.P, description="Probability measure simulated")
    block_size: int = Field(
        default=4096, ge=1, description="Paths per work unit; results do not depend on it"
    )
    workers: int = Field(default=1, ge=1, description="Threads used for path blocks")
    record_paths: bool = Field(
        default=False, description="Keep full state and control trajectories"
    )
    record_increments: bool = Field(
        default=False, description="Keep the Brownian increments (dW₁, dW₂)"
    )


class PathEnsemble(BaseModel):
    """Simulated trajectories of one measure.

    Under P `states` holds x(t). Under P̃ `states` holds L(t) and `wealth` holds X(t)
    (terminal values only unless trajectories were recorded).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    measure: Measure
    seed: int
    times: np.ndarray
    states: Optional[np.ndarray] = Field(default=None, description="(n_paths, n_steps+1)")
    controls: Optional[np.ndarray] = Field(default=None, description="(n_paths, n_steps)")
    increments: Optional[np.ndarray] = Field(
        default=None, description="(n_paths, n_steps, 2) correlated increments"
    )
    terminal_state: np.ndarray = Field(description="x(T) under P, L(T) under P̃")
    integrals: Optional[np.ndarray] = Field(
        default=None, description="Per-path left-endpoint ∫₀ᵀ h dt (measure P)"
    )
    log_wealth: Optional[np.ndarray] = Field(
        default=None, description="Per-path log X(T) (measure P̃)"
    )
    wealth: Optional[np.ndarray] = Field(
        default=None, description="(n_paths, n_steps+1) wealth trajectories (P̃, recorded)"
    )
    flagged: Optional[np.ndarray] = Field(
        default=None, description="Paths whose wealth left (0, ∞) numerically"
    )
    rn_weights: Optional[np.ndarray] = Field(
        default=None, description="Per-path dP/dP̃ values"
    )
    max_control_sq: float = Field(
        default=0.0, description="Largest u(t)² seen over all paths and steps"
    )
    probes: Optional[List[Any]] = Field(
        default=None, description="Per-block step observers, in block order"
    )

    @property
    def n_paths(self) -> int:
        return int(self.terminal_state.shape[0])

    @property
    def terminal_wealth(self) -> np.ndarray:
        return np.exp(self.log_wealth)


class Estimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(ge=0.0)
    n: int = Field(description="Paths entering the estimate")
    excluded: int = Field(default=0, description="Flagged paths left out")
