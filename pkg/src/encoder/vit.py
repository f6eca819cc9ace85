"""Reference toy vision transformer with LoRA-aware attention."""
import math
from typing import Optional

import torch
import torch.nn as nn
from einops import rearrange
from einops.layers.torch import Rearrange

from data.adapter_dataclass import LoRAParams
from data.embedding_dataclass import EmbeddingBatch
from data.image_dataclass import ImageBatch
from src.encoder.lora import lora_effective_weight
from src.errors import BadImageShape, ShapeMismatch
from src.hypersphere import normalize_rows
from src.schemas.config_schema import EncoderConfig


def attention_forward(
    h: torch.Tensor,
    w_q: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
    heads: int = 1,
) -> torch.Tensor:
    """
    softmax((h W_Q)(h W_K)^T / sqrt(d_head)) h W_V, per head, heads concatenated.

    ``h`` is (n, d) or (b, n, d); weights are (d, d) acting on row vectors.
    """
    d = h.shape[-1]
    for name, w in (("W_Q", w_q), ("W_K", w_k), ("W_V", w_v)):
        if w.shape != (d, d):
            raise ShapeMismatch(f"{name} has shape {tuple(w.shape)}, expected ({d}, {d})")
    if d % heads != 0:
        raise ShapeMismatch(f"width {d} not divisible by {heads} heads")

    q = rearrange(h @ w_q, "... n (h e) -> ... h n e", h=heads)
    k = rearrange(h @ w_k, "... n (h e) -> ... h n e", h=heads)
    v = rearrange(h @ w_v, "... n (h e) -> ... h n e", h=heads)
    dots = q @ k.transpose(-1, -2) / math.sqrt(d // heads)
    attn = torch.softmax(dots, dim=-1)
    return rearrange(attn @ v, "... h n e -> ... n (h e)")


class Attention(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.w_q = nn.Parameter(torch.empty(width, width))
        self.w_k = nn.Parameter(torch.empty(width, width))
        self.w_v = nn.Parameter(torch.empty(width, width))
        self.out = nn.Linear(width, width)

    def forward(self, x: torch.Tensor, layer: int, lora: Optional[LoRAParams] = None) -> torch.Tensor:
        weights = {}
        for target in ("q", "k", "v"):
            w = getattr(self, f"w_{target}")
            factor = lora.get(layer, target) if lora is not None else None
            if factor is not None:
                w = lora_effective_weight(w, factor.A, factor.B, lora.scale)
            weights[target] = w
        h = attention_forward(x, weights["q"], weights["k"], weights["v"], heads=self.heads)
        return self.out(h)


class Block(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.width, eps=cfg.layer_norm_eps)
        self.attn = Attention(cfg.width, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.width, eps=cfg.layer_norm_eps)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.width, cfg.width * cfg.mlp_ratio),
            nn.GELU(),
            nn.Linear(cfg.width * cfg.mlp_ratio, cfg.width),
        )

    def forward(self, x: torch.Tensor, layer: int, lora: Optional[LoRAParams] = None) -> torch.Tensor:
        x = x + self.attn(self.norm1(x), layer, lora)
        x = x + self.mlp(self.norm2(x))
        return x


class ToyViT(nn.Module):
    """Pre-norm ViT: patches -> [cls] + tokens -> depth blocks -> cls readout -> projection."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        n_patches = (cfg.image_size // cfg.patch_size) ** 2
        patch_dim = 3 * cfg.patch_size ** 2

        self.to_patches = Rearrange(
            "b (h p1) (w p2) c -> b (h w) (p1 p2 c)", p1=cfg.patch_size, p2=cfg.patch_size
        )
        self.patch_embed = nn.Linear(patch_dim, cfg.width)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.width))
        self.pos_embedding = nn.Parameter(torch.zeros(1, n_patches + 1, cfg.width))
        self.blocks = nn.ModuleList([Block(cfg) for _ in range(cfg.depth)])
        self.norm = nn.LayerNorm(cfg.width, eps=cfg.layer_norm_eps)
        self.proj = nn.Linear(cfg.width, cfg.embed_dim, bias=False)
        self._init_parameters()

    def _init_parameters(self) -> None:
        for module in self.modules():
            if isinstance(module, nn.Linear):
                nn.init.trunc_normal_(module.weight, std=0.02)
                if module.bias is not None:
                    nn.init.zeros_(module.bias)
        for block in self.blocks:
            for w in (block.attn.w_q, block.attn.w_k, block.attn.w_v):
                nn.init.trunc_normal_(w, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        nn.init.trunc_normal_(self.pos_embedding, std=0.02)

    def forward(self, pixels: torch.Tensor, lora: Optional[LoRAParams] = None) -> torch.Tensor:
        """Returns raw (unnormalised) embeddings, (B, embed_dim)."""
        x = self.patch_embed(self.to_patches(pixels))
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embedding
        for layer, block in enumerate(self.blocks):
            x = block(x, layer, lora)
        return self.proj(self.norm(x[:, 0]))


def build_stem(cfg: EncoderConfig, seed: int, dtype: torch.dtype = torch.float32) -> ToyViT:
    """Freshly initialised stem; initialisation draws only from ``seed``."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        stem = ToyViT(cfg)
    return stem.to(dtype)


def encoder_forward(images: ImageBatch, stem: ToyViT, lora: Optional[LoRAParams] = None) -> EmbeddingBatch:
    cfg = stem.cfg
    pixels = images.pixels
    expected = (cfg.image_size, cfg.image_size, 3)
    if pixels.dim() != 4 or tuple(pixels.shape[1:]) != expected:
        raise BadImageShape(f"expected images of shape (B, {expected[0]}, {expected[1]}, 3), got {tuple(pixels.shape)}")
    dtype = next(stem.parameters()).dtype
    return normalize_rows(stem(pixels.to(dtype), lora))
