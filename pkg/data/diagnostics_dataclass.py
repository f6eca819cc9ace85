from dataclasses import dataclass
from typing import Optional


@dataclass
class DiagnosticsReport:
    mean_entropy: float
    uniformity_metric: float
    emd_modality_gap: float
    histogram: list[int]
    mutual_information: float
    accuracy: Optional[float] = None
