from typing import Iterator

import torch

from data.embedding_dataclass import PrototypeBank
from generator.base_generator import BaseGenerator
from src.prompt_bank import make_toy_bank


class BankGenerator(BaseGenerator):
    """
    Генератор банков прототипов классов для игрушечного бенчмарка.
    """

    def generate_bank(self, classes: int, dim: int, seed=None, temperature: float = 0.01, class_names=None) -> Iterator[PrototypeBank]:
        seed = self.get_seed(seed)
        yield make_toy_bank(
            C=classes,
            d=dim,
            seed=seed,
            temperature=temperature,
            class_names=self.get_class_names(class_names, classes, seed),
        )

    def generate_per_prompt_embeddings(self, prompts: int, classes: int, dim: int, seed=None, spread: float = 0.3) -> Iterator[torch.Tensor]:
        """
        Эмбеддинги P промптов на класс: прототип игрушечного банка плюс шум, нормированные.
        """
        seed = self.get_seed(seed)
        base = make_toy_bank(classes, dim, seed).prototypes
        generator = self.get_generator(self.get_seed(seed, "prompts"))
        noisy = base.unsqueeze(0) + spread * torch.randn(prompts, classes, dim, generator=generator)
        yield noisy / noisy.norm(dim=-1, keepdim=True)
