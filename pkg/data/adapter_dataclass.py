from dataclasses import dataclass

import torch


@dataclass
class LoRAFactor:
    A: torch.Tensor  # width x rank
    B: torch.Tensor  # rank x width


@dataclass
class LoRAParams:
    """Low-rank factors keyed by "<layer>.<target>", e.g. "0.q"."""

    factors: dict[str, LoRAFactor]
    scale: float = 1.0

    @staticmethod
    def key(layer: int, target: str) -> str:
        return f"{layer}.{target}"

    def get(self, layer: int, target: str):
        return self.factors.get(self.key(layer, target))

    def tensors(self) -> list[torch.Tensor]:
        out = []
        for name in sorted(self.factors):
            out.extend([self.factors[name].A, self.factors[name].B])
        return out

    def named_tensors(self) -> dict[str, torch.Tensor]:
        out = {}
        for name in sorted(self.factors):
            out[f"{name}.A"] = self.factors[name].A
            out[f"{name}.B"] = self.factors[name].B
        return out

    def clone(self, requires_grad: bool = False) -> "LoRAParams":
        factors = {
            name: LoRAFactor(
                A=f.A.detach().clone().requires_grad_(requires_grad),
                B=f.B.detach().clone().requires_grad_(requires_grad),
            )
            for name, f in self.factors.items()
        }
        return LoRAParams(factors=factors, scale=self.scale)

    @classmethod
    def from_named_tensors(cls, tensors: dict[str, torch.Tensor], scale: float) -> "LoRAParams":
        factors = {}
        for name in {k.rsplit(".", 1)[0] for k in tensors}:
            factors[name] = LoRAFactor(A=tensors[f"{name}.A"], B=tensors[f"{name}.B"])
        return cls(factors=factors, scale=scale)


@dataclass
class TeacherState:
    ema_params: LoRAParams
    momentum: float = 0.001
