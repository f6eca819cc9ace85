import pytest
import torch

from data.image_dataclass import ImageBatch
from services.adaptation_service import AdaptationService
from src.encoder import build_stem
from src.schemas.config_schema import TTAConfig


@pytest.fixture
def make_service(tiny_encoder_cfg, tiny_lora_cfg, toy_bank):
    """Фабрика сервиса адаптации на маленьком ViT в float64."""
    def _make(**tta) -> AdaptationService:
        stem = build_stem(tiny_encoder_cfg, seed=3, dtype=torch.float64)
        return AdaptationService(stem, toy_bank.to(torch.float64), TTAConfig(**tta), tiny_lora_cfg)
    return _make


@pytest.fixture
def first_batch(tiny_dataset):
    return ImageBatch(pixels=tiny_dataset.pixels[:8], source_id=tiny_dataset.source_id), tiny_dataset.labels[:8]
