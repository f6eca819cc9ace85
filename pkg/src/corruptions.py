"""
Desk-scale corruption families at five severity levels.

Images are (B, H, W, 3) tensors in [0, 1]. Noise kinds draw only from the spec
seed; the remaining kinds are deterministic functions of the input.
"""
from typing import Callable, Iterable, Optional

import numpy as np
import torch
import torch.nn.functional as F
from einops import rearrange
from kornia.filters import filter2d
from scipy.fft import dctn, idctn

from data import CORRUPTION_KINDS, get_severity_schedule
from data.image_dataclass import CorruptionSpec, ImageBatch, StreamBatch, ToyDataset
from data.presets import JPEG_LUMA_TABLE
from functions import derive_seed
from src.errors import EmptyKinds, UnknownKind
from src.logger import get_logger

logger = get_logger(__name__)
severity = get_severity_schedule()


def _generator(seed: int) -> torch.Generator:
    return torch.Generator().manual_seed(seed)


def _as_channels_first(pixels: torch.Tensor) -> torch.Tensor:
    return rearrange(pixels, "b h w c -> b c h w")


def _as_channels_last(pixels: torch.Tensor) -> torch.Tensor:
    return rearrange(pixels, "b c h w -> b h w c")


def disk_kernel(radius: int, dtype=torch.float32) -> torch.Tensor:
    size = torch.arange(-radius, radius + 1, dtype=dtype)
    xs, ys = torch.meshgrid(size, size, indexing="xy")
    kernel = ((xs ** 2 + ys ** 2) <= radius ** 2).to(dtype)
    return kernel / kernel.sum()


def motion_kernel(length: int, angle: float = 45.0, dtype=torch.float32) -> torch.Tensor:
    """Normalised line of ``length`` pixels through the kernel centre."""
    if angle % 180 == 45:
        kernel = torch.eye(length, dtype=dtype).flip(0)
    elif angle % 180 == 135:
        kernel = torch.eye(length, dtype=dtype)
    elif angle % 180 == 0:
        kernel = torch.zeros(length, length, dtype=dtype)
        kernel[length // 2, :] = 1
    else:
        raise ValueError(f"unsupported motion angle {angle}")
    return kernel / kernel.sum()


def _filter(pixels: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    x = _as_channels_first(pixels)
    out = filter2d(x, kernel.unsqueeze(0).to(x.dtype), border_type="reflect", normalized=False)
    return _as_channels_last(out)


def gaussian_noise(pixels, sigma, seed):
    noise = torch.randn(pixels.shape, generator=_generator(seed), dtype=pixels.dtype)
    return pixels + sigma * noise


def shot_noise(pixels, photons, seed):
    return torch.poisson(pixels * photons, generator=_generator(seed)) / photons


def impulse_noise(pixels, amount, seed):
    generator = _generator(seed)
    flip = torch.rand(pixels.shape, generator=generator) < amount
    salt = (torch.rand(pixels.shape, generator=generator) < 0.5).to(pixels.dtype)
    return torch.where(flip, salt, pixels)


def defocus_blur(pixels, radius, seed=None):
    return _filter(pixels, disk_kernel(int(radius)))


def motion_blur(pixels, length, seed=None):
    return _filter(pixels, motion_kernel(int(length), severity.MotionBlur.angle))


def contrast(pixels, scale, seed=None):
    mean = pixels.mean(dim=(1, 2, 3), keepdim=True)
    return (pixels - mean) * scale + mean


def brightness(pixels, offset, seed=None):
    return pixels + offset


def pixelate(pixels, factor, seed=None):
    x = _as_channels_first(pixels)
    height, width = x.shape[-2:]
    small = F.interpolate(x, size=(max(1, int(height * factor)), max(1, int(width * factor))), mode="area")
    return _as_channels_last(F.interpolate(small, size=(height, width), mode="nearest"))


def _quant_table(quality: int) -> np.ndarray:
    quality = min(max(int(quality), 1), 100)
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    table = np.floor((np.asarray(JPEG_LUMA_TABLE, dtype=np.float64) * scale + 50) / 100)
    return np.clip(table, 1, None)


def jpeg_like(pixels, quality, seed=None):
    """8x8 block DCT, quantise with the scaled luminance table, invert. Edges are padded."""
    table = _quant_table(quality)
    array = pixels.detach().cpu().double().numpy() * 255.0 - 128.0
    b, h, w, c = array.shape
    pad_h, pad_w = (-h) % 8, (-w) % 8
    array = np.pad(array, ((0, 0), (0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    blocks = rearrange(array, "b (y p) (x q) c -> b y x c p q", p=8, q=8)
    coeffs = dctn(blocks, axes=(-2, -1), norm="ortho")
    coeffs = np.round(coeffs / table) * table
    restored = idctn(coeffs, axes=(-2, -1), norm="ortho")
    restored = rearrange(restored, "b y x c p q -> b (y p) (x q) c")[:, :h, :w, :]
    return torch.from_numpy((restored + 128.0) / 255.0).to(pixels.dtype)


_KINDS: dict[str, tuple[Callable, list]] = {
    "gaussian_noise": (gaussian_noise, severity.GaussianNoise.sigma),
    "shot_noise": (shot_noise, severity.ShotNoise.photons),
    "impulse_noise": (impulse_noise, severity.ImpulseNoise.amount),
    "defocus_blur": (defocus_blur, severity.DefocusBlur.radius),
    "motion_blur": (motion_blur, severity.MotionBlur.length),
    "contrast": (contrast, severity.Contrast.scale),
    "brightness": (brightness, severity.Brightness.offset),
    "pixelate": (pixelate, severity.Pixelate.factor),
    "jpeg_like": (jpeg_like, severity.JpegLike.quality),
}

NOISE_KINDS = ("gaussian_noise", "shot_noise", "impulse_noise")


def severity_parameter(kind: str, level: int):
    if kind not in _KINDS:
        raise UnknownKind(f"unknown corruption kind '{kind}', must be one of {list(CORRUPTION_KINDS)}")
    if level not in range(1, 6):
        raise ValueError(f"severity must be in 1..5, got {level}")
    return _KINDS[kind][1][level - 1]


def apply_corruption(clean: ImageBatch, spec: CorruptionSpec, parameter: Optional[float] = None) -> ImageBatch:
    """
    Applies ``spec`` to a clean batch; ``parameter`` overrides the severity-indexed value.
    """
    if spec.kind not in _KINDS:
        raise UnknownKind(f"unknown corruption kind '{spec.kind}', must be one of {list(CORRUPTION_KINDS)}")
    transform, _ = _KINDS[spec.kind]
    value = severity_parameter(spec.kind, spec.severity) if parameter is None else parameter
    with torch.no_grad():
        out = transform(clean.pixels, value, spec.seed).clamp(0.0, 1.0)
    return ImageBatch(pixels=out, source_id=clean.source_id, spec=spec)


def corruption_stream(
    dataset: ToyDataset,
    kind: str,
    level: int,
    seed: int,
    batch_size: int,
) -> list[StreamBatch]:
    """One corrupted stream: dataset order, one derived seed per batch."""
    stream = []
    for index, start in enumerate(range(0, len(dataset), batch_size)):
        clean = ImageBatch(pixels=dataset.pixels[start:start + batch_size], source_id=dataset.source_id)
        spec = CorruptionSpec(kind=kind, severity=level, seed=derive_seed(seed, kind, index))
        stream.append(StreamBatch(images=apply_corruption(clean, spec), labels=dataset.labels[start:start + batch_size]))
    return stream


def corruption_suite(
    dataset: ToyDataset,
    kinds: Iterable[str],
    level: int,
    seed: int,
    batch_size: int = 64,
) -> dict[str, list[StreamBatch]]:
    kinds = list(kinds)
    if not kinds:
        raise EmptyKinds("corruption suite needs at least one kind")
    unknown = [kind for kind in kinds if kind not in _KINDS]
    if unknown:
        raise UnknownKind(f"unknown corruption kinds {unknown}")
    suite = {}
    for kind in kinds:
        suite[kind] = corruption_stream(dataset, kind, level, derive_seed(seed, "suite", kind), batch_size)
        logger.info(f"Corrupted {len(dataset)} images with {kind} (severity {level}) into {len(suite[kind])} batches")
    return suite
