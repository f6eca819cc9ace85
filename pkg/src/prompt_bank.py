"""Class prototype banks: prompt ensembles, toy banks and archive ingestion."""
from pathlib import Path
from typing import Optional, Sequence

import torch

from data.embedding_dataclass import PrototypeBank
from functions import get_current_path, load_json
from src.errors import NonUnitRows, ShapeMismatch, TooManyClasses, ZeroMeanVector
from src.logger import get_logger
from src.schemas.config_schema import PrototypeSourceConfig
from src.tensor_archive import read_archive, read_sidecar

logger = get_logger(__name__)

TEMPLATES_FILE = "data/prompts/templates.txt"
SYNONYMS_FILE = "data/prompts/corruption_synonyms.json"
PROMPT_NORM_TOL = 1e-4


def ensemble_prototypes(
    per_prompt: torch.Tensor,
    class_names: Optional[Sequence[str]] = None,
    temperature: float = 0.01,
) -> PrototypeBank:
    """Mean over the P prompt embeddings of each class, renormalised."""
    if per_prompt.dim() != 3 or per_prompt.numel() == 0:
        raise ShapeMismatch(f"expected per-prompt embeddings of shape (P, C, d), got {tuple(per_prompt.shape)}")
    deviation = (per_prompt.norm(dim=-1) - 1).abs().max().item()
    if deviation > PROMPT_NORM_TOL:
        raise NonUnitRows(f"prompt embeddings must be unit-norm (max deviation {deviation:.3e})")
    mean = per_prompt.mean(dim=0)
    norms = mean.norm(dim=1, keepdim=True)
    cancelled = (norms.squeeze(1) <= 1e-12).nonzero().flatten().tolist()
    if cancelled:
        raise ZeroMeanVector(f"prompt embeddings cancel out for classes {cancelled}")
    names = list(class_names) if class_names is not None else []
    return PrototypeBank(prototypes=mean / norms, temperature=temperature, class_names=names)


def make_toy_bank(C: int, d: int, seed: int, temperature: float = 0.01, class_names: Optional[Sequence[str]] = None) -> PrototypeBank:
    """C rows of a seeded random orthonormal basis (QR of a Gaussian matrix)."""
    if C > d:
        raise TooManyClasses(f"cannot place {C} orthonormal prototypes in dimension {d}")
    generator = torch.Generator().manual_seed(seed)
    gaussian = torch.randn(d, d, generator=generator, dtype=torch.float64)
    q, _ = torch.linalg.qr(gaussian)
    prototypes = q[:, :C].T.contiguous().float()
    names = list(class_names) if class_names is not None else []
    return PrototypeBank(prototypes=prototypes, temperature=temperature, class_names=names)


def load_templates(path: str = TEMPLATES_FILE) -> list[str]:
    with open(get_current_path(path), "r", encoding="utf-8") as file:
        return [line.strip() for line in file if line.strip()]


def load_corruption_synonyms(path: str = SYNONYMS_FILE) -> dict[str, list[str]]:
    return load_json(path)


def format_prompts(class_names: Sequence[str], templates: Sequence[str]) -> list[list[str]]:
    """Prompt grid [P][C] for exporting text embeddings with an external encoder."""
    return [[template.format(name) for name in class_names] for template in templates]


def corruption_prompts(synonyms: dict[str, list[str]], template: str = "a photo corrupted by {}.") -> dict[str, list[str]]:
    return {kind: [template.format(word) for word in words] for kind, words in synonyms.items()}


def load_prototype_bank(archive: Path, temperature: float = 0.01) -> PrototypeBank:
    """
    Reads ``text_embeddings`` [P, C, d] (or [C, d]) and the ``class_names.json`` sidecar.
    """
    tensors = read_archive(archive)
    if "text_embeddings" not in tensors:
        raise ShapeMismatch(f"{archive}: archive has no 'text_embeddings' tensor")
    embeddings = tensors["text_embeddings"]
    if embeddings.dim() == 2:
        embeddings = embeddings.unsqueeze(0)
    try:
        class_names = read_sidecar(archive, "class_names.json")
    except OSError:
        class_names = None
    bank = ensemble_prototypes(embeddings, class_names, temperature)
    logger.info(f"Loaded prototype bank from {archive}: P={embeddings.shape[0]}, C={bank.C}, d={bank.d}")
    return bank


def load_prototype_source(cfg: PrototypeSourceConfig, embed_dim: int, class_names: Optional[Sequence[str]] = None) -> PrototypeBank:
    if cfg.archive_path is not None:
        return load_prototype_bank(Path(cfg.archive_path), cfg.temperature)
    return make_toy_bank(cfg.classes, embed_dim, cfg.seed, cfg.temperature, class_names)
