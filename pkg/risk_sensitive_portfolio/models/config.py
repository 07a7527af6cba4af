from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .market import MarketParams
from .simulation import SimConfig
from .sweep import SweepSpec


class RunConfig(BaseModel):
    """Everything `run <config.json>` reads."""

    model_config = ConfigDict(extra="forbid")

    cmd: Literal["solve", "policy", "simulate", "sweep", "verify"]
    params: MarketParams = Field(default_factory=MarketParams)
    sim: SimConfig = Field(default_factory=SimConfig)
    grid: int = Field(default=1000, ge=2, description="Intervals of the value-function grid")
    out_dir: Path = Field(default=Path("out"))
    policy: Literal["feedback", "constant", "zero"] = "feedback"
    constant_u: float = 0.0
    times: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    states: List[float] = Field(default_factory=lambda: [0.55])
    sweeps: Optional[Dict[str, List[SweepSpec]]] = Field(
        default=None, description="Named sweep families; the four figure presets when omitted"
    )


class RunManifest(BaseModel):
    cmd: str
    seed: int
    timestamp: str
    versions: Dict[str, str]
    params_sha256: str
    outputs: List[str] = Field(default_factory=list)
