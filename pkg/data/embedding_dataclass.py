from dataclasses import dataclass, field

import torch

from src.errors import ShapeMismatch

UNIT_NORM_TOL = 1e-5


def _check_unit_rows(matrix: torch.Tensor, what: str) -> None:
    with torch.no_grad():
        norms = matrix.norm(dim=1)
        worst = (norms - 1).abs().max().item()
    if worst > UNIT_NORM_TOL:
        raise ValueError(f"{what} rows must be unit-norm (max deviation {worst:.3e})")


@dataclass(frozen=True)
class EmbeddingBatch:
    data: torch.Tensor  # B x d

    def __post_init__(self):
        if self.data.dim() != 2:
            raise ShapeMismatch(f"EmbeddingBatch expects a B x d matrix, got shape {tuple(self.data.shape)}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 2:
            raise ShapeMismatch(f"EmbeddingBatch needs B >= 1 and d >= 2, got {tuple(self.data.shape)}")
        _check_unit_rows(self.data, "EmbeddingBatch")

    @property
    def B(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PrototypeBank:
    prototypes: torch.Tensor  # C x d
    temperature: float = 0.01
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.prototypes.dim() != 2:
            raise ShapeMismatch(f"PrototypeBank expects a C x d matrix, got shape {tuple(self.prototypes.shape)}")
        if self.prototypes.shape[0] < 2:
            raise ShapeMismatch(f"PrototypeBank needs C >= 2, got {self.prototypes.shape[0]}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not self.class_names:
            object.__setattr__(self, "class_names", [f"class_{c}" for c in range(self.C)])
        if len(self.class_names) != self.C:
            raise ShapeMismatch(f"{len(self.class_names)} class names for {self.C} prototypes")
        _check_unit_rows(self.prototypes, "PrototypeBank")

    @property
    def C(self) -> int:
        return self.prototypes.shape[0]

    @property
    def d(self) -> int:
        return self.prototypes.shape[1]

    def to(self, dtype: torch.dtype) -> "PrototypeBank":
        return PrototypeBank(self.prototypes.to(dtype), self.temperature, list(self.class_names))


@dataclass(frozen=True)
class PredictionBatch:
    probs: torch.Tensor  # B x C
    labels: torch.Tensor  # B, int64

    @property
    def B(self) -> int:
        return self.probs.shape[0]

    @property
    def C(self) -> int:
        return self.probs.shape[1]

    def detach(self) -> "PredictionBatch":
        return PredictionBatch(self.probs.detach(), self.labels)
