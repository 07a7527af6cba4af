from pydantic import BaseModel, ConfigDict, Field


class AdjointTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float = Field(description="First-order costate p̄(t) = -Q(t)x - φ(t)")
    q1: float = Field(description="Diffusion coefficient q̄₁(t) = -σQ(t) against W₁")
    q2: float = Field(description="Diffusion coefficient q̄₂(t) = -σ̄Q(t) against W₂")


class MinimizerReport(BaseModel):
    samples: int = Field(description="Number of sampled (t, x) points")
    max_deviation: float = Field(
        description="Largest |grid argmin of 𝓗 - feedback(t, x)| over the samples"
    )
    tolerance: float = Field(description="Accepted deviation")
    passed: bool
