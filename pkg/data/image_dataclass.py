from dataclasses import dataclass, field
from typing import Optional

import torch


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int
    seed: int = 0

    def as_dict(self) -> dict:
        return {"kind": self.kind, "severity": self.severity, "seed": self.seed}


@dataclass(frozen=True)
class ImageBatch:
    pixels: torch.Tensor  # B x H x W x 3, values in [0, 1]
    source_id: str = "clean"
    spec: Optional[CorruptionSpec] = None

    @property
    def B(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class StreamBatch:
    images: ImageBatch
    labels: Optional[torch.Tensor] = None


@dataclass
class ToyDataset:
    pixels: torch.Tensor  # N x H x W x 3
    labels: torch.Tensor  # N
    class_names: list[str] = field(default_factory=list)
    source_id: str = "toy"

    def __len__(self) -> int:
        return self.pixels.shape[0]
