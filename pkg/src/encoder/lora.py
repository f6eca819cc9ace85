"""Low-rank adapters on the attention projections and their EMA teacher."""
import copy
import math

import torch
from torch import nn

from data.adapter_dataclass import LoRAFactor, LoRAParams, TeacherState
from src.errors import RankTooLarge, ShapeMismatch
from src.schemas.config_schema import EncoderConfig, LoRAConfig


def init_lora(cfg: LoRAConfig, enc: EncoderConfig, dtype: torch.dtype = torch.float32) -> LoRAParams:
    """
    A ~ Kaiming-uniform with bound sqrt(6 / width), B = 0, so A @ B = 0 at start.
    """
    if not 1 <= cfg.rank < enc.width:
        raise RankTooLarge(f"LoRA rank {cfg.rank} must satisfy 1 <= rank < width {enc.width}")
    generator = torch.Generator().manual_seed(cfg.seed)
    factors = {}
    for layer in range(enc.depth):
        for target in cfg.targets:
            # kaiming_uniform_ reads fan_in from dim 1, so draw (rank, width) and transpose
            a = torch.empty(cfg.rank, enc.width, dtype=dtype)
            nn.init.kaiming_uniform_(a, a=0, nonlinearity="relu", generator=generator)
            factors[LoRAParams.key(layer, target)] = LoRAFactor(
                A=a.T.contiguous().requires_grad_(True),
                B=torch.zeros(cfg.rank, enc.width, dtype=dtype, requires_grad=True),
            )
    return LoRAParams(factors=factors, scale=cfg.scale)


def kaiming_bound(width: int) -> float:
    return math.sqrt(6.0 / width)


def lora_effective_weight(W: torch.Tensor, A: torch.Tensor, B: torch.Tensor, scale: float = 1.0) -> torch.Tensor:
    if W.dim() != 2 or A.dim() != 2 or B.dim() != 2:
        raise ShapeMismatch("W, A and B must be matrices")
    if A.shape[0] != W.shape[0] or B.shape[1] != W.shape[1] or A.shape[1] != B.shape[0]:
        raise ShapeMismatch(
            f"incompatible shapes W{tuple(W.shape)} A{tuple(A.shape)} B{tuple(B.shape)}"
        )
    return W + scale * (A @ B)


def _check_same_shapes(left: LoRAParams, right: LoRAParams) -> None:
    if set(left.factors) != set(right.factors):
        raise ShapeMismatch(f"adapter keys differ: {sorted(left.factors)} vs {sorted(right.factors)}")
    for name, f in left.factors.items():
        g = right.factors[name]
        if f.A.shape != g.A.shape or f.B.shape != g.B.shape:
            raise ShapeMismatch(f"adapter '{name}' shapes differ")


def make_teacher(student: LoRAParams, momentum: float) -> TeacherState:
    return TeacherState(ema_params=student.clone(requires_grad=False), momentum=momentum)


@torch.no_grad()
def ema_update(teacher: TeacherState, student: LoRAParams) -> TeacherState:
    """φ̄ ← m·φ + (1 − m)·φ̄ (momentum weights the student)."""
    _check_same_shapes(teacher.ema_params, student)
    m = teacher.momentum
    factors = {}
    for name, old in teacher.ema_params.factors.items():
        new = student.factors[name]
        factors[name] = LoRAFactor(
            A=m * new.A.detach() + (1.0 - m) * old.A,
            B=m * new.B.detach() + (1.0 - m) * old.B,
        )
    return TeacherState(ema_params=LoRAParams(factors=factors, scale=teacher.ema_params.scale), momentum=m)


@torch.no_grad()
def merge_lora(stem: nn.Module, lora: LoRAParams, scale: float | None = None) -> nn.Module:
    """Returns a copy of ``stem`` with every targeted projection replaced by W + scale·A·B."""
    scale = lora.scale if scale is None else scale
    merged = copy.deepcopy(stem)
    for name, factor in lora.factors.items():
        layer, target = name.split(".")
        attn = merged.blocks[int(layer)].attn
        weight = getattr(attn, f"w_{target}")
        weight.copy_(lora_effective_weight(weight, factor.A.detach(), factor.B.detach(), scale))
    return merged
