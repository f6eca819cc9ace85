from pathlib import Path
from typing import Optional

import torch
import torch.nn.functional as F

from data.adapter_dataclass import LoRAParams
from data.embedding_dataclass import PrototypeBank
from data.image_dataclass import ImageBatch, ToyDataset
from src.encoder import build_stem, encoder_forward
from src.encoder.vit import ToyViT
from src.errors import ParseError
from src.hypersphere import zero_shot_logits
from src.logger import get_logger
from src.schemas.config_schema import EncoderConfig, PretrainConfig
from src.tensor_archive import read_archive, read_sidecar, write_archive


class PretrainService:
    """
    Предобучение игрушечного ViT на чистых данных против фиксированного банка прототипов.
    """

    logger = get_logger(__name__)

    def pretrain(self, cfg: EncoderConfig, dataset: ToyDataset, bank: PrototypeBank, pretrain_cfg: PretrainConfig) -> ToyViT:
        stem = build_stem(cfg, pretrain_cfg.seed)
        stem.train()
        optimizer = torch.optim.AdamW(stem.parameters(), lr=pretrain_cfg.lr, weight_decay=pretrain_cfg.weight_decay)
        generator = torch.Generator().manual_seed(pretrain_cfg.seed)
        n = len(dataset)
        steps_per_epoch = (n + pretrain_cfg.batch_size - 1) // pretrain_cfg.batch_size
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=pretrain_cfg.epochs * steps_per_epoch)

        for epoch in range(pretrain_cfg.epochs):
            order = torch.randperm(n, generator=generator)
            total = 0.0
            for start in range(0, n, pretrain_cfg.batch_size):
                index = order[start:start + pretrain_cfg.batch_size]
                batch = ImageBatch(pixels=dataset.pixels[index], source_id=dataset.source_id)
                logits = zero_shot_logits(encoder_forward(batch, stem), bank)
                loss = F.cross_entropy(logits, dataset.labels[index])
                optimizer.zero_grad(set_to_none=True)
                loss.backward()
                optimizer.step()
                scheduler.step()
                total += float(loss.detach()) * len(index)
            self.logger.info(f"Pretrain epoch {epoch + 1}/{pretrain_cfg.epochs}: loss {total / n:.4f}")

        stem.eval()
        for param in stem.parameters():
            param.requires_grad_(False)
        return stem

    @staticmethod
    def evaluate(stem: ToyViT, dataset: ToyDataset, bank: PrototypeBank, lora: Optional[LoRAParams] = None, batch_size: int = 256) -> float:
        correct = 0
        with torch.no_grad():
            for start in range(0, len(dataset), batch_size):
                batch = ImageBatch(pixels=dataset.pixels[start:start + batch_size], source_id=dataset.source_id)
                labels = torch.argmax(zero_shot_logits(encoder_forward(batch, stem, lora), bank), dim=1)
                correct += int((labels == dataset.labels[start:start + batch_size]).sum())
        return correct / len(dataset)

    @staticmethod
    def save_stem(stem: ToyViT, path: Path, meta: Optional[dict] = None) -> Path:
        tensors = {name: tensor.detach() for name, tensor in stem.state_dict().items()}
        sidecar = {"encoder": stem.cfg.model_dump()}
        sidecar.update(meta or {})
        return write_archive(path, tensors, sidecars={"stem.json": sidecar})

    def load_stem(self, path: Path) -> ToyViT:
        sidecar = read_sidecar(path, "stem.json")
        stem = ToyViT(EncoderConfig.model_validate(sidecar["encoder"]))
        try:
            stem.load_state_dict(read_archive(path))
        except RuntimeError as ex:
            raise ParseError(f"{path}: stem weights do not match the encoder config: {ex}") from ex
        stem.eval()
        for param in stem.parameters():
            param.requires_grad_(False)
        self.logger.info(f"Loaded stem from {path}")
        return stem
