import json

import pytest

TINY_EXPERIMENT = {
    "toy_dataset": {"n_samples": 24, "n_train": 48, "seed": 0},
    "prototypes": {"classes": 3, "seed": 0, "temperature": 0.1},
    "encoder": {"image_size": 8, "patch_size": 4, "depth": 1, "width": 8, "heads": 2, "embed_dim": 4, "mlp_ratio": 2},
    "pretrain": {"epochs": 1, "batch_size": 16, "seed": 0},
    "lora": {"rank": 1, "alpha": 1.0},
    "tta": {"batch_size": 8, "lr": 0.01},
    "kinds": ["gaussian_noise", "brightness"],
    "severity": 3,
    "seeds": [1, 2],
}


@pytest.fixture
def write_config(tmp_path):
    """Пишет JSON-конфигурацию маленького эксперимента с output_dir внутри tmp_path."""
    def _write(name: str = "config.json", **overrides) -> str:
        config = json.loads(json.dumps(TINY_EXPERIMENT))
        config["output_dir"] = str(tmp_path / "out")
        config.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
