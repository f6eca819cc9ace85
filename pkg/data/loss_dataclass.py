from dataclasses import dataclass
from typing import Optional

import torch


@dataclass
class LossBreakdown:
    total: torch.Tensor  # carries the graph
    ent: torch.Tensor
    unif: torch.Tensor
    pl: torch.Tensor
    mi: float
    w: float

    def as_floats(self) -> dict:
        return {
            "total": float(self.total.detach()),
            "ent": float(self.ent.detach()),
            "unif": float(self.unif.detach()),
            "pl": float(self.pl.detach()),
            "mi": self.mi,
            "w": self.w,
        }


@dataclass
class MetricsRecord:
    step: int
    loss_ent: float
    loss_unif: float
    loss_pl: float
    mi: float
    w: float
    acc_teacher: Optional[float]
    acc_student: Optional[float]
    uniformity_metric: float
    marginal_entropy: float


METRICS_COLUMNS = [
    "step",
    "loss_ent",
    "loss_unif",
    "loss_pl",
    "mi",
    "w",
    "acc_teacher",
    "acc_student",
    "uniformity_metric",
    "marginal_entropy",
]
