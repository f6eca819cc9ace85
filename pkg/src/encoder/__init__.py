from src.encoder.lora import init_lora, lora_effective_weight, ema_update, make_teacher, merge_lora
from src.encoder.vit import ToyViT, attention_forward, build_stem, encoder_forward

__all__ = [
    "ToyViT",
    "attention_forward",
    "build_stem",
    "encoder_forward",
    "init_lora",
    "lora_effective_weight",
    "ema_update",
    "make_teacher",
    "merge_lora",
]
