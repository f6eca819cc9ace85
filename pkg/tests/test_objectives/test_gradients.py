import allure
import pytest
import torch
from torch.autograd import gradcheck

from data.adapter_dataclass import LoRAParams
from data.embedding_dataclass import PredictionBatch, PrototypeBank
from data.image_dataclass import ImageBatch
from src.encoder import build_stem, encoder_forward, init_lora
from src.hypersphere import normalize_rows, zero_shot_probs
from src.objectives import composite_loss, distillation_loss, entropy_loss, mutual_information, uniformity_loss
from src.prompt_bank import make_toy_bank
from src.schemas.config_schema import BalanceConfig, EncoderConfig, LoRAConfig

GRADCHECK = {"eps": 1e-5, "atol": 1e-7, "rtol": 1e-4}


def _bank(C: int, d: int, seed: int = 0) -> PrototypeBank:
    return make_toy_bank(C, d, seed, temperature=0.1).to(torch.float64)


@allure.epic("Objectives: gradients against finite differences")
class TestLossGradients:
    """Производные по сырым (ненормированным) эмбеддингам, B=4, d=8, C=5."""

    generator = torch.Generator().manual_seed(7)
    raw = torch.randn(4, 8, generator=generator, dtype=torch.float64)
    teacher_probs = torch.softmax(torch.randn(4, 5, generator=generator, dtype=torch.float64), dim=1)

    def _student(self, raw):
        z = normalize_rows(raw)
        return z, zero_shot_probs(z, _bank(5, 8))

    @allure.title("Entropy loss gradient")
    @pytest.mark.gradcheck
    @pytest.mark.critical_path
    def test_entropy(self):
        assert gradcheck(lambda raw: entropy_loss(self._student(raw)[1]), (self.raw.clone().requires_grad_(True),), **GRADCHECK)

    @allure.title("Uniformity loss gradient")
    @pytest.mark.gradcheck
    @pytest.mark.critical_path
    def test_uniformity(self):
        assert gradcheck(lambda raw: uniformity_loss(normalize_rows(raw)), (self.raw.clone().requires_grad_(True),), **GRADCHECK)

    @allure.title("Distillation loss gradient")
    @pytest.mark.gradcheck
    @pytest.mark.critical_path
    def test_distillation(self):
        teacher = PredictionBatch(self.teacher_probs, self.teacher_probs.argmax(1))
        assert gradcheck(
            lambda raw: distillation_loss(teacher, self._student(raw)[1]),
            (self.raw.clone().requires_grad_(True),),
            **GRADCHECK,
        )

    @allure.title("Mutual information gradient")
    @pytest.mark.gradcheck
    @pytest.mark.regression
    def test_mutual_information(self):
        assert gradcheck(
            lambda raw: mutual_information(self._student(raw)[1], clamp=False),
            (self.raw.clone().requires_grad_(True),),
            **GRADCHECK,
        )

    @allure.title("Composite loss gradient at a frozen balancing weight")
    @pytest.mark.gradcheck
    @pytest.mark.critical_path
    def test_composite(self):
        teacher = PredictionBatch(self.teacher_probs, self.teacher_probs.argmax(1))
        cfg = BalanceConfig(lam=1.0, i0=0.5)

        def total(raw):
            z, student = self._student(raw)
            return composite_loss(z, student, teacher, cfg, frozen_w=0.8).total

        assert gradcheck(total, (self.raw.clone().requires_grad_(True),), **GRADCHECK)


@allure.epic("Encoder: LoRA gradients against finite differences")
class TestLoRAGradients:
    """Градиент полной целевой функции по каждому элементу A и B на игрушечном ViT."""

    encoder_cfg = EncoderConfig(image_size=16, patch_size=4, depth=2, width=16, heads=2, embed_dim=8, mlp_ratio=2)
    lora_cfg = LoRAConfig(rank=2, alpha=2.0, seed=3)

    @allure.title("Composite objective gradient w.r.t. every adapter entry")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.gradcheck
    @pytest.mark.slow
    def test_adapter_gradients(self, timer):
        stem = build_stem(self.encoder_cfg, seed=1, dtype=torch.float64)
        for param in stem.parameters():
            param.requires_grad_(False)
        bank = _bank(3, self.encoder_cfg.embed_dim, seed=2)
        generator = torch.Generator().manual_seed(4)
        images = ImageBatch(pixels=torch.rand(4, 16, 16, 3, generator=generator, dtype=torch.float64))

        lora = init_lora(self.lora_cfg, self.encoder_cfg, dtype=torch.float64)
        # nonzero B so that gradients reach A as well
        names = sorted(lora.named_tensors())
        values = [
            (torch.randn(t.shape, generator=generator, dtype=torch.float64) * 0.3 if name.endswith(".B") else t.detach().clone())
            for name, t in ((n, lora.named_tensors()[n]) for n in names)
        ]
        teacher_lora = LoRAParams.from_named_tensors({n: v.clone() * 0.5 for n, v in zip(names, values)}, lora.scale)
        with torch.no_grad():
            teacher = zero_shot_probs(encoder_forward(images, stem, teacher_lora), bank)
        cfg = BalanceConfig(lam=1.0, i0=0.5)

        def total(*tensors):
            params = LoRAParams.from_named_tensors(dict(zip(names, tensors)), lora.scale)
            z = encoder_forward(images, stem, params)
            student = zero_shot_probs(z, bank)
            return composite_loss(z, student, teacher, cfg, frozen_w=1.3).total

        inputs = tuple(v.requires_grad_(True) for v in values)
        assert gradcheck(total, inputs, **GRADCHECK)
