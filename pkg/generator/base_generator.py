import torch
from faker import Faker

from functions import derive_seed


class BaseGenerator:
    """
    Базовый класс для генерации детерминированных синтетических данных.
    Faker отвечает за читаемые имена, torch.Generator отвечает за численные выборки.
    """

    faker = Faker("en_US")

    def get_seed(self, seed, *labels):
        if seed is None:
            return self.faker.random_int(min=0, max=2 ** 31 - 1)
        if labels:
            return derive_seed(seed, *labels)
        return seed

    def get_generator(self, seed) -> torch.Generator:
        return torch.Generator().manual_seed(int(seed))

    def get_class_names(self, class_names, count, seed):
        if class_names is None:
            self.faker.seed_instance(seed)
            self.faker.unique.clear()
            return [self.faker.unique.word() for _ in range(count)]
        return list(class_names)

    def get_source_id(self, source_id, seed):
        if source_id is None:
            return f"toy-{seed}"
        return source_id
