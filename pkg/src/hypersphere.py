"""Unit-hypersphere arithmetic and the zero-shot classification head."""
import torch

from data.embedding_dataclass import EmbeddingBatch, PrototypeBank, PredictionBatch
from src.errors import DimensionMismatch, LengthMismatch, ZeroVectorRow

ZERO_NORM = 1e-12


def normalize_rows(raw: torch.Tensor) -> EmbeddingBatch:
    """Scales every row to unit L2 norm; differentiable w.r.t. ``raw``."""
    norms = raw.norm(dim=1, keepdim=True)
    if bool((norms.detach() <= ZERO_NORM).any()):
        bad = (norms.detach().squeeze(1) <= ZERO_NORM).nonzero().flatten().tolist()
        raise ZeroVectorRow(f"rows {bad} have norm <= {ZERO_NORM}")
    return EmbeddingBatch(raw / norms)


def zero_shot_logits(z: EmbeddingBatch, bank: PrototypeBank) -> torch.Tensor:
    if z.d != bank.d:
        raise DimensionMismatch(f"embedding dim {z.d} != prototype dim {bank.d}")
    return z.data @ bank.prototypes.to(z.data.dtype).T / bank.temperature


def zero_shot_probs(z: EmbeddingBatch, bank: PrototypeBank) -> PredictionBatch:
    """
    Softmax over cosine similarities scaled by 1/τ.

    torch.softmax subtracts the row max, so τ = 0.01 does not overflow.
    Labels take the first maximal index.
    """
    logits = zero_shot_logits(z, bank)
    probs = torch.softmax(logits, dim=1)
    labels = torch.argmax(logits.detach(), dim=1)
    return PredictionBatch(probs=probs, labels=labels)


def batch_accuracy(pred: PredictionBatch, truth: torch.Tensor) -> float:
    truth = torch.as_tensor(truth)
    if truth.numel() != pred.labels.numel():
        raise LengthMismatch(f"{pred.labels.numel()} predictions vs {truth.numel()} labels")
    return (pred.labels.cpu() == truth.cpu().long()).double().mean().item()
