from pathlib import Path
from typing import Literal, Optional, List

from pydantic import BaseModel, Field, field_validator, model_validator

from data import CORRUPTION_KINDS, PRESET_NAMES


class EncoderConfig(BaseModel):
    image_size: int = 32
    patch_size: int = 4
    depth: int = 4
    width: int = 64
    heads: int = 4
    embed_dim: int = 64
    mlp_ratio: int = 4
    layer_norm_eps: float = 1e-5

    @model_validator(mode="after")
    def check_geometry(self):
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} must be divisible by patch_size {self.patch_size}"
            )
        if self.width % self.heads != 0:
            raise ValueError(f"width {self.width} must be divisible by heads {self.heads}")
        if self.depth < 1 or self.embed_dim < 2:
            raise ValueError("depth must be >= 1 and embed_dim >= 2")
        return self


class LoRAConfig(BaseModel):
    rank: int = 2
    alpha: float = 2.0
    targets: List[Literal["q", "k", "v"]] = ["q", "k", "v"]
    seed: int = 0

    @field_validator("rank")
    def check_rank(cls, v: int) -> int:
        if v < 1:
            raise ValueError("LoRA rank must be a positive integer")
        return v

    @field_validator("alpha")
    def check_alpha(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("LoRA alpha must be positive")
        return v

    @property
    def scale(self) -> float:
        return self.alpha / self.rank


class BalanceConfig(BaseModel):
    lam: float = Field(default=1.0, alias="lambda")
    i0: float = 3.0
    balancing_enabled: bool = True
    unif_enabled: bool = True
    pl_enabled: bool = True

    model_config = {"populate_by_name": True}

    @field_validator("lam")
    def check_lambda(cls, v: float) -> float:
        if v < 0:
            raise ValueError("lambda must be nonnegative")
        return v


class TTAConfig(BaseModel):
    batch_size: int = 64
    lr: float = 0.001
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.001
    balance: BalanceConfig = BalanceConfig()
    seed: int = 0
    eval_mode: Literal["online", "posthoc"] = "online"

    @field_validator("lr")
    def check_lr(cls, v: float) -> float:
        # lr = 0 is the evaluation-only mode
        if v < 0:
            raise ValueError("lr must be nonnegative")
        return v

    @field_validator("momentum")
    def check_momentum(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("EMA momentum must lie in (0, 1)")
        return v

    @field_validator("batch_size")
    def check_batch_size(cls, v: int) -> int:
        if v < 2:
            raise ValueError("batch_size must be >= 2, uniformity needs pairs")
        return v


class PretrainConfig(BaseModel):
    epochs: int = 12
    lr: float = 0.001
    weight_decay: float = 0.05
    batch_size: int = 128
    seed: int = 0


class ToyDatasetConfig(BaseModel):
    n_samples: int = 2048
    n_train: int = 6000
    seed: int = 0


class PrototypeSourceConfig(BaseModel):
    archive_path: Optional[Path] = None
    classes: int = 10
    seed: int = 0
    temperature: float = 0.01

    @field_validator("archive_path")
    def check_archive(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not Path(v).exists():
            raise ValueError(f"prototype archive not found: {v}")
        return v

    @field_validator("temperature")
    def check_temperature(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("temperature must be positive")
        return v


class ExperimentConfig(BaseModel):
    dataset_path: Optional[Path] = None
    toy_dataset: ToyDatasetConfig = ToyDatasetConfig()
    prototypes: PrototypeSourceConfig = PrototypeSourceConfig()
    encoder: EncoderConfig = EncoderConfig()
    stem_checkpoint: Optional[Path] = None
    pretrain: PretrainConfig = PretrainConfig()
    lora: LoRAConfig = LoRAConfig()
    tta: TTAConfig = TTAConfig()
    kinds: List[str] = ["gaussian_noise"]
    severity: int = 5
    preset: str = "full"
    output_dir: Path = Path("runs")
    seeds: List[int] = [1, 2, 3]

    @field_validator("stem_checkpoint")
    def check_path_exists(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not Path(v).exists():
            raise ValueError(f"path does not exist: {v}")
        return v

    @field_validator("kinds")
    def check_kinds(cls, v: List[str]) -> List[str]:
        unknown = [k for k in v if k not in CORRUPTION_KINDS]
        if unknown:
            raise ValueError(f"Unknown corruption kinds {unknown}, must be among {list(CORRUPTION_KINDS)}")
        return v

    @field_validator("severity")
    def check_severity(cls, v: int) -> int:
        if v not in range(1, 6):
            raise ValueError("severity must be in 1..5")
        return v

    @field_validator("preset")
    def check_preset(cls, v: str) -> str:
        if v not in PRESET_NAMES:
            raise ValueError(f"Invalid preset '{v}', must be one of {list(PRESET_NAMES)}")
        return v

    @field_validator("seeds")
    def check_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("seeds must be nonempty")
        return v

    @model_validator(mode="after")
    def check_rank_vs_width(self):
        if self.lora.rank >= self.encoder.width:
            raise ValueError(f"LoRA rank {self.lora.rank} must be < encoder width {self.encoder.width}")
        return self
