import math
from typing import Iterator

import torch

from data.image_dataclass import ToyDataset
from generator.base_generator import BaseGenerator

# Per-class colour schemes; class c uses scheme c // n_orientations.
COLOUR_SCHEMES = [
    (1.0, 0.55, 0.15),
    (0.15, 0.55, 1.0),
    (0.3, 1.0, 0.3),
    (1.0, 0.2, 0.8),
]


class ImageGenerator(BaseGenerator):
    """
    Генератор игрушечного чистого датасета: цветные решетки, ориентация и цвет задают класс.
    """

    n_orientations = 5
    cycles = 3.0

    def _class_pattern(self, labels, image_size, generator):
        n = labels.shape[0]
        orientation = (labels % self.n_orientations).double() * math.pi / self.n_orientations
        orientation = orientation + (torch.rand(n, generator=generator, dtype=torch.float64) - 0.5) * math.radians(10)
        frequency = self.cycles * (1 + (torch.rand(n, generator=generator, dtype=torch.float64) - 0.5) * 0.2)
        phase = torch.rand(n, generator=generator, dtype=torch.float64) * 2 * math.pi

        coords = torch.arange(image_size, dtype=torch.float64) / image_size
        ys, xs = torch.meshgrid(coords, coords, indexing="ij")
        projection = (
            xs[None] * torch.cos(orientation)[:, None, None] + ys[None] * torch.sin(orientation)[:, None, None]
        )
        return torch.sin(2 * math.pi * frequency[:, None, None] * projection + phase[:, None, None])

    def generate_dataset(
        self,
        n_samples: int,
        classes: int = 10,
        image_size: int = 32,
        seed=None,
        class_names=None,
        source_id=None,
    ) -> Iterator[ToyDataset]:
        seed = self.get_seed(seed)
        generator = self.get_generator(seed)

        labels = torch.arange(n_samples) % classes
        labels = labels[torch.randperm(n_samples, generator=generator)]

        wave = self._class_pattern(labels, image_size, generator)
        schemes = torch.tensor(COLOUR_SCHEMES, dtype=torch.float64)
        colour = schemes[(labels // self.n_orientations) % len(COLOUR_SCHEMES)]
        amplitude = 0.25 + 0.2 * torch.rand(n_samples, generator=generator, dtype=torch.float64)
        background = 0.4 + 0.2 * torch.rand(n_samples, generator=generator, dtype=torch.float64)

        pixels = background[:, None, None, None] + (
            amplitude[:, None, None, None] * wave[..., None] * colour[:, None, None, :]
        )
        pixels = pixels + 0.02 * torch.randn(pixels.shape, generator=generator, dtype=torch.float64)

        yield ToyDataset(
            pixels=pixels.clamp(0.0, 1.0).float(),
            labels=labels,
            class_names=self.get_class_names(class_names, classes, seed),
            source_id=self.get_source_id(source_id, seed),
        )
