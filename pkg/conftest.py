import os
import time

import pytest
import torch

from generator import BankGenerator, ImageGenerator
from src.schemas.config_schema import EncoderConfig, LoRAConfig


@pytest.fixture
def get_test_name():
    """
    Фикстура для получения имени текущего теста.
    """
    test_name = os.environ.get("PYTEST_CURRENT_TEST")
    return test_name


@pytest.fixture
def timer(request):
    """Измерение времени выполнения теста."""
    start = time.time()
    yield
    end = time.time()
    print(f'''\n{request.node.name} finished in {end - start:.2f} seconds.''')


@pytest.fixture(scope="session")
def tiny_encoder_cfg():
    """Маленький ViT для быстрых тестов: глубина 2, ширина 16."""
    return EncoderConfig(image_size=8, patch_size=4, depth=2, width=16, heads=2, embed_dim=8, mlp_ratio=2)


@pytest.fixture(scope="session")
def tiny_lora_cfg():
    return LoRAConfig(rank=2, alpha=2.0, targets=["q", "k", "v"], seed=0)


@pytest.fixture(scope="session")
def toy_bank():
    """Ортонормированный банк из 3 классов в размерности 8."""
    return next(BankGenerator().generate_bank(classes=3, dim=8, seed=11, temperature=0.1))


@pytest.fixture(scope="session")
def tiny_dataset():
    """Игрушечный датасет 8x8 на 3 класса."""
    return next(ImageGenerator().generate_dataset(n_samples=24, classes=3, image_size=8, seed=5))


@pytest.fixture
def torch_seed():
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(1234)
        yield 1234
