from pathlib import Path
from typing import Optional

import numpy as np
import torch
from PIL import Image

from data.image_dataclass import CorruptionSpec, ImageBatch, StreamBatch, ToyDataset
from functions import content_hash
from generator.image_generator import ImageGenerator
from src.errors import IoError, ParseError
from src.logger import get_logger
from src.tensor_archive import read_archive, read_sidecar, write_archive


class DatasetService:
    """
    Сервис загрузки чистых данных и кэширования поврежденных потоков.
    """

    logger = get_logger(__name__)

    def __init__(self, image_size: int = 32):
        self.image_size = image_size
        self.image_generator = ImageGenerator()

    def toy_split(self, n_samples: int, classes: int, seed: int, split: str) -> ToyDataset:
        """Синтетическая выборка; train и test получают независимые производные сиды."""
        return next(self.image_generator.generate_dataset(
            n_samples=n_samples,
            classes=classes,
            image_size=self.image_size,
            seed=self.image_generator.get_seed(seed, split),
            source_id=f"toy-{split}-{seed}",
        ))

    def load(self, path: Optional[Path]) -> ToyDataset:
        """Загружает чистые изображения: каталог PNG (<root>/<class>/*.png) или тензорный архив."""
        if path is None:
            raise IoError("no dataset path given")
        path = Path(path)
        if not path.exists():
            self.logger.error(f"Dataset path not found: {path}")
            raise IoError(f"dataset path not found: {path}")
        if (path / "manifest.json").exists():
            return self._load_archive(path)
        return self._load_png_tree(path)

    def _load_archive(self, path: Path) -> ToyDataset:
        tensors = read_archive(path)
        if "images" not in tensors or "labels" not in tensors:
            raise ParseError(f"{path}: archive must hold 'images' and 'labels'")
        images = tensors["images"]
        if images.dim() != 4 or images.shape[-1] != 3:
            raise ParseError(f"{path}: 'images' must be [N, H, W, 3], got {list(images.shape)}")
        try:
            class_names = read_sidecar(path, "class_names.json")
        except OSError:
            class_names = []
        return ToyDataset(pixels=images.clamp(0, 1), labels=tensors["labels"].long(), class_names=class_names, source_id=path.name)

    def _load_png_tree(self, path: Path) -> ToyDataset:
        class_dirs = sorted(d for d in path.iterdir() if d.is_dir())
        if not class_dirs:
            raise IoError(f"{path}: expected one sub-directory per class")
        pixels, labels = [], []
        for label, class_dir in enumerate(class_dirs):
            for file in sorted(class_dir.glob("*.png")):
                with Image.open(file) as image:
                    image = image.convert("RGB").resize((self.image_size, self.image_size), Image.BILINEAR)
                    pixels.append(np.asarray(image, dtype=np.float32) / 255.0)
                labels.append(label)
        if not pixels:
            raise IoError(f"{path}: no PNG images found")
        self.logger.info(f"Loaded {len(pixels)} PNG images in {len(class_dirs)} classes from {path}")
        return ToyDataset(
            pixels=torch.from_numpy(np.stack(pixels)),
            labels=torch.tensor(labels, dtype=torch.long),
            class_names=[d.name for d in class_dirs],
            source_id=path.name,
        )

    @staticmethod
    def digest(dataset: ToyDataset) -> str:
        payload = dataset.pixels.numpy().tobytes() + dataset.labels.numpy().tobytes()
        return content_hash(payload)

    @staticmethod
    def batch_stream(dataset: ToyDataset, batch_size: int) -> list[StreamBatch]:
        return [
            StreamBatch(
                images=ImageBatch(pixels=dataset.pixels[start:start + batch_size], source_id=dataset.source_id),
                labels=dataset.labels[start:start + batch_size],
            )
            for start in range(0, len(dataset), batch_size)
        ]

    def save_stream(self, stream: list[StreamBatch], path: Path, meta: dict) -> Path:
        images = torch.cat([item.images.pixels for item in stream])
        labels = torch.cat([item.labels for item in stream])
        meta = dict(meta)
        meta["batch_sizes"] = [item.images.B for item in stream]
        meta["batch_seeds"] = [item.images.spec.seed if item.images.spec else None for item in stream]
        return write_archive(path, {"images": images, "labels": labels}, sidecars={"corruption.json": meta})

    def load_stream(self, path: Path) -> list[StreamBatch]:
        tensors = read_archive(path)
        meta = read_sidecar(path, "corruption.json")
        stream, start = [], 0
        for size, seed in zip(meta["batch_sizes"], meta["batch_seeds"]):
            spec = CorruptionSpec(kind=meta["kind"], severity=meta["severity"], seed=seed) if seed is not None else None
            stream.append(StreamBatch(
                images=ImageBatch(pixels=tensors["images"][start:start + size], source_id=meta.get("source_id", "clean"), spec=spec),
                labels=tensors["labels"][start:start + size],
            ))
            start += size
        return stream
