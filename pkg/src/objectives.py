"""Loss terms of the information-balanced objective."""
import math
from typing import Optional

import torch

from data.embedding_dataclass import EmbeddingBatch, PredictionBatch
from data.loss_dataclass import LossBreakdown
from src.errors import BatchTooSmall, ShapeMismatch
from src.schemas.config_schema import BalanceConfig

PROB_FLOOR = 1e-12


def _safe_log(p: torch.Tensor) -> torch.Tensor:
    return p.clamp_min(PROB_FLOOR).log()


def row_entropy(probs: torch.Tensor) -> torch.Tensor:
    # 0 * log 0 is 0: p = 0 multiplies the clamped log
    return -(probs * _safe_log(probs)).sum(dim=-1)


def entropy_loss(pred: PredictionBatch) -> torch.Tensor:
    return row_entropy(pred.probs).mean()


def marginal_entropy(pred: PredictionBatch) -> torch.Tensor:
    return row_entropy(pred.probs.mean(dim=0))


def _pairwise_sq_dist(z: EmbeddingBatch) -> torch.Tensor:
    diff = z.data.unsqueeze(1) - z.data.unsqueeze(0)
    return (diff * diff).sum(dim=-1)


def uniformity_loss(z: EmbeddingBatch, include_diagonal: bool = True) -> torch.Tensor:
    """
    log of the mean Gaussian potential exp(-||z_i - z_j||^2) over all ordered pairs.

    The default averages over all B^2 pairs including i = j. With
    ``include_diagonal=False`` only the B(B-1) distinct pairs count.
    """
    if z.B < 2:
        raise BatchTooSmall(f"uniformity needs at least 2 embeddings, got {z.B}")
    sq = _pairwise_sq_dist(z)
    if include_diagonal:
        terms = -sq.flatten()
    else:
        mask = ~torch.eye(z.B, dtype=torch.bool, device=sq.device)
        terms = -sq[mask]
    return torch.logsumexp(terms, dim=0) - math.log(terms.numel())


def uniformity_metric(z: EmbeddingBatch) -> float:
    if z.B < 2:
        raise BatchTooSmall(f"uniformity needs at least 2 embeddings, got {z.B}")
    with torch.no_grad():
        return torch.exp(-_pairwise_sq_dist(z)).mean().item()


def mutual_information(pred: PredictionBatch, clamp: bool = True) -> torch.Tensor:
    """H(p̄) minus mean per-sample entropy. Concavity keeps it >= 0 up to rounding."""
    mi = marginal_entropy(pred) - entropy_loss(pred)
    if clamp:
        mi = mi.clamp_min(0.0)
    return mi


def balance_weight(mi: float, cfg: BalanceConfig) -> float:
    """w = exp(mi - I0). Returned as a plain float: no gradient reaches it."""
    if mi < 0:
        raise ValueError(f"mutual information must be nonnegative, got {mi}")
    if not cfg.balancing_enabled:
        return 1.0
    return math.exp(mi - cfg.i0)


def distillation_loss(teacher: PredictionBatch, student: PredictionBatch) -> torch.Tensor:
    """Cross-entropy of the student against the teacher's distribution."""
    if teacher.probs.shape != student.probs.shape:
        raise ShapeMismatch(
            f"teacher probs {tuple(teacher.probs.shape)} vs student probs {tuple(student.probs.shape)}"
        )
    return -(teacher.probs * _safe_log(student.probs)).sum(dim=1).mean()


def composite_loss(
    z: EmbeddingBatch,
    student: PredictionBatch,
    teacher: PredictionBatch,
    cfg: BalanceConfig,
    frozen_w: Optional[float] = None,
) -> LossBreakdown:
    """
    total = w * ent + (λ / w) * unif + pl, with disabled terms left out.

    The teacher distribution is detached. ``frozen_w`` pins the weight to a
    literal instead of deriving it from the batch.
    """
    if z.B < 2:
        raise BatchTooSmall(f"composite loss needs B >= 2, got {z.B}")
    if z.B != student.B:
        raise ShapeMismatch(f"{z.B} embeddings vs {student.B} predictions")

    teacher = teacher.detach()
    ent = entropy_loss(student)
    unif = uniformity_loss(z)
    pl = distillation_loss(teacher, student)
    mi = float(mutual_information(student).detach())
    w = balance_weight(mi, cfg) if frozen_w is None else float(frozen_w)

    total = w * ent
    if cfg.unif_enabled:
        total = total + (cfg.lam / w) * unif
    if cfg.pl_enabled:
        total = total + pl
    return LossBreakdown(total=total, ent=ent, unif=unif, pl=pl, mi=mi, w=w)
