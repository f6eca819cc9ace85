import math

import allure
import pytest
import torch

from data.adapter_dataclass import LoRAFactor, LoRAParams
from data.image_dataclass import ImageBatch
from src.assertions import Assertions
from src.encoder import build_stem, encoder_forward, init_lora, lora_effective_weight, merge_lora
from src.encoder.lora import kaiming_bound
from src.errors import RankTooLarge, ShapeMismatch
from src.schemas.config_schema import EncoderConfig, LoRAConfig


def _naive_matmul(A: torch.Tensor, B: torch.Tensor) -> torch.Tensor:
    out = torch.zeros(A.shape[0], B.shape[1], dtype=torch.float64)
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            for k in range(A.shape[1]):
                out[i, j] += A[i, k] * B[k, j]
    return out


@allure.epic("Encoder: LoRA initialisation")
class TestInitLoRA:
    assertions = Assertions()

    @allure.title("Zero B makes every delta vanish")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.smoke
    def test_zero_delta(self, tiny_encoder_cfg, tiny_lora_cfg):
        lora = init_lora(tiny_lora_cfg, tiny_encoder_cfg)
        assert len(lora.factors) == tiny_encoder_cfg.depth * len(tiny_lora_cfg.targets)
        for factor in lora.factors.values():
            assert factor.A.shape == (tiny_encoder_cfg.width, tiny_lora_cfg.rank)
            assert factor.B.shape == (tiny_lora_cfg.rank, tiny_encoder_cfg.width)
            assert torch.count_nonzero(factor.A @ factor.B) == 0

    @allure.title("A entries respect the Kaiming-uniform bound")
    @pytest.mark.critical_path
    def test_kaiming_bound(self, tiny_encoder_cfg, tiny_lora_cfg):
        lora = init_lora(tiny_lora_cfg, tiny_encoder_cfg)
        bound = kaiming_bound(tiny_encoder_cfg.width)
        assert bound == math.sqrt(6.0 / tiny_encoder_cfg.width)
        for factor in lora.factors.values():
            assert factor.A.abs().max() <= bound
            assert factor.A.abs().max() > 0

    @allure.title("Same seed gives bitwise-identical adapters, another seed does not")
    @pytest.mark.critical_path
    def test_deterministic(self, tiny_encoder_cfg, tiny_lora_cfg):
        first = init_lora(tiny_lora_cfg, tiny_encoder_cfg)
        second = init_lora(tiny_lora_cfg, tiny_encoder_cfg)
        other = init_lora(tiny_lora_cfg.model_copy(update={"seed": 99}), tiny_encoder_cfg)
        for name in first.factors:
            assert torch.equal(first.factors[name].A, second.factors[name].A)
        assert any(not torch.equal(first.factors[n].A, other.factors[n].A) for n in first.factors)

    @allure.title("Rank equal to width raises RankTooLarge")
    @pytest.mark.extended
    def test_rank_too_large(self, tiny_encoder_cfg):
        with pytest.raises(RankTooLarge):
            init_lora(LoRAConfig(rank=tiny_encoder_cfg.width), tiny_encoder_cfg)

    @allure.title("Default scale is alpha / rank = 1")
    @pytest.mark.extended
    def test_default_scale(self):
        assert LoRAConfig().scale == 1.0


@allure.epic("Encoder: effective weights")
class TestEffectiveWeight:
    assertions = Assertions()

    @allure.title("Zero B returns W exactly")
    @pytest.mark.smoke
    def test_identity(self, torch_seed):
        W = torch.randn(5, 5)
        assert torch.equal(lora_effective_weight(W, torch.randn(5, 2), torch.zeros(2, 5)), W)

    @allure.title("Rank-one outer product lands on a single entry")
    @pytest.mark.critical_path
    def test_outer_product(self):
        out = lora_effective_weight(torch.zeros(2, 2), torch.tensor([[1.0], [0.0]]), torch.tensor([[0.0, 1.0]]), 1.0)
        assert torch.equal(out, torch.tensor([[0.0, 1.0], [0.0, 0.0]]))

    @allure.title("Scaled update matches a naive triple loop")
    @pytest.mark.regression
    def test_naive_oracle(self, get_test_name, torch_seed):
        W = torch.randn(4, 4, dtype=torch.float64)
        A = torch.randn(4, 3, dtype=torch.float64)
        B = torch.randn(3, 4, dtype=torch.float64)
        self.assertions.assert_tensors_close(lora_effective_weight(W, A, B, 2.0), W + 2.0 * _naive_matmul(A, B), 1e-12, get_test_name)

    @allure.title("Incompatible shapes raise ShapeMismatch")
    @pytest.mark.extended
    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            lora_effective_weight(torch.zeros(4, 4), torch.zeros(3, 2), torch.zeros(2, 4))


@allure.epic("Encoder: LoRA injection and merge")
class TestLoRAForward:
    assertions = Assertions()

    @staticmethod
    def _images(cfg: EncoderConfig, n: int, seed: int = 0) -> ImageBatch:
        generator = torch.Generator().manual_seed(seed)
        return ImageBatch(pixels=torch.rand(n, cfg.image_size, cfg.image_size, 3, generator=generator))

    @staticmethod
    def _random_lora(cfg: EncoderConfig, lora_cfg: LoRAConfig, seed: int = 1) -> LoRAParams:
        generator = torch.Generator().manual_seed(seed)
        lora = init_lora(lora_cfg, cfg)
        return LoRAParams(
            factors={
                name: LoRAFactor(A=f.A.detach(), B=0.2 * torch.randn(f.B.shape, generator=generator))
                for name, f in lora.factors.items()
            },
            scale=lora.scale,
        )

    @allure.title("Fresh adapters leave the default encoder unchanged on 32 images")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.smoke
    def test_identity_at_init(self, get_test_name, timer):
        cfg = EncoderConfig()
        stem = build_stem(cfg, seed=0)
        images = self._images(cfg, 32)
        with torch.no_grad():
            plain = encoder_forward(images, stem)
            adapted = encoder_forward(images, stem, init_lora(LoRAConfig(), cfg))
        self.assertions.assert_tensors_close(adapted.data, plain.data, 1e-6, get_test_name)
        self.assertions.assert_unit_rows(adapted.data, test_name=get_test_name)

    @allure.title("Merging zero-B adapters reproduces the stem exactly")
    @pytest.mark.critical_path
    def test_merge_zero(self, tiny_encoder_cfg, tiny_lora_cfg):
        stem = build_stem(tiny_encoder_cfg, seed=0)
        merged = merge_lora(stem, init_lora(tiny_lora_cfg, tiny_encoder_cfg))
        for (name, a), (_, b) in zip(stem.state_dict().items(), merged.state_dict().items()):
            assert torch.equal(a, b), name

    @allure.title("Merged forward matches the adapted forward on 8 images")
    @pytest.mark.critical_path
    def test_merge_consistency(self, get_test_name, tiny_encoder_cfg, tiny_lora_cfg):
        stem = build_stem(tiny_encoder_cfg, seed=0)
        lora = self._random_lora(tiny_encoder_cfg, tiny_lora_cfg)
        images = self._images(tiny_encoder_cfg, 8)
        with torch.no_grad():
            adapted = encoder_forward(images, stem, lora)
            merged = encoder_forward(images, merge_lora(stem, lora))
        self.assertions.assert_tensors_close(merged.data, adapted.data, 1e-5, get_test_name)

    @allure.title("Merging twice adds the delta twice")
    @pytest.mark.extended
    def test_merge_not_idempotent(self, tiny_encoder_cfg, tiny_lora_cfg):
        stem = build_stem(tiny_encoder_cfg, seed=0)
        lora = self._random_lora(tiny_encoder_cfg, tiny_lora_cfg)
        once = merge_lora(stem, lora)
        twice = merge_lora(once, lora)
        assert not torch.equal(once.blocks[0].attn.w_q, twice.blocks[0].attn.w_q)
        # the original stem is untouched
        assert not torch.equal(stem.blocks[0].attn.w_q, once.blocks[0].attn.w_q)
