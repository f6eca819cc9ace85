from pydantic import BaseModel, field_validator
from typing import Optional


class MetricsRowSchema(BaseModel):
    step: int
    loss_ent: float
    loss_unif: float
    loss_pl: float
    mi: float
    w: float
    acc_teacher: Optional[float] = None
    acc_student: Optional[float] = None
    uniformity_metric: float
    marginal_entropy: float

    @field_validator("loss_ent", "loss_pl", "mi", "marginal_entropy")
    def check_nonnegative(cls, v: float) -> float:
        if v < -1e-6:
            raise ValueError(f"value must be nonnegative, got {v}")
        return v

    @field_validator("loss_unif")
    def check_unif(cls, v: float) -> float:
        if not -4.0 - 1e-6 <= v <= 1e-6:
            raise ValueError(f"uniformity loss out of [-4, 0]: {v}")
        return v

    @field_validator("w")
    def check_w(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("balancing weight must be positive")
        return v


class SummaryRowSchema(BaseModel):
    kind: str
    preset: str
    mean_accuracy: float
    std_accuracy: float
    n_seeds: int
    mean_posthoc_accuracy: Optional[float] = None
    no_adapt_accuracy: Optional[float] = None


class SweepRowSchema(BaseModel):
    value: float
    mean: float
    std: float


class ProjectionRowSchema(BaseModel):
    set: str
    x: float
    y: float

    @field_validator("set")
    def check_set(cls, v: str) -> str:
        if v not in ["image", "text"]:
            raise ValueError(f'Invalid set: {v}. set must be one of ["image", "text"]')
        return v


class EvalRowSchema(BaseModel):
    kind: str
    accuracy: Optional[float] = None
    mean_entropy: float
    uniformity_metric: float
    emd_modality_gap: float
    mutual_information: float
    histogram: list[int]

    @field_validator("histogram", mode="before")
    def parse_histogram(cls, v):
        # stored as "n0;n1;...;nC-1"
        if isinstance(v, str):
            return [int(count) for count in v.split(";")]
        return v

    @field_validator("histogram")
    def check_histogram(cls, v: list[int]) -> list[int]:
        if not v or min(v) < 0:
            raise ValueError(f"histogram needs nonnegative counts, got {v}")
        return v
