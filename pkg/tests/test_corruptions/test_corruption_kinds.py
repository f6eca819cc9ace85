import allure
import pytest
import torch

from data import CORRUPTION_KINDS
from data.image_dataclass import CorruptionSpec, ImageBatch
from generator import ImageGenerator
from src.assertions import Assertions
from src.corruptions import NOISE_KINDS, apply_corruption, disk_kernel, motion_kernel, severity_parameter
from src.errors import UnknownKind


@pytest.fixture(scope="module")
def clean_batch():
    dataset = next(ImageGenerator().generate_dataset(n_samples=8, classes=2, image_size=16, seed=1))
    return ImageBatch(pixels=dataset.pixels, source_id=dataset.source_id)


def _mse(batch: ImageBatch, clean: ImageBatch) -> float:
    return float(((batch.pixels.double() - clean.pixels.double()) ** 2).mean())


@allure.epic("Corruptions: kinds")
class TestCorruptionKinds:
    assertions = Assertions()

    @allure.title("{kind} keeps shape and stays in [0, 1]")
    @pytest.mark.smoke
    @pytest.mark.parametrize("kind", CORRUPTION_KINDS)
    @pytest.mark.parametrize("level", [1, 5])
    def test_shape_and_range(self, clean_batch, kind, level):
        out = apply_corruption(clean_batch, CorruptionSpec(kind, level, seed=7))
        assert out.pixels.shape == clean_batch.pixels.shape
        assert out.pixels.dtype == clean_batch.pixels.dtype
        assert float(out.pixels.min()) >= 0.0 and float(out.pixels.max()) <= 1.0
        assert out.spec == CorruptionSpec(kind, level, seed=7)
        assert out.source_id == clean_batch.source_id

    @allure.title("{kind} is reproducible under a fixed seed")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.critical_path
    @pytest.mark.parametrize("kind", CORRUPTION_KINDS)
    def test_deterministic(self, clean_batch, kind):
        first = apply_corruption(clean_batch, CorruptionSpec(kind, 3, seed=42))
        second = apply_corruption(clean_batch, CorruptionSpec(kind, 3, seed=42))
        assert torch.equal(first.pixels, second.pixels)

    @allure.title("Only noise kinds depend on the seed")
    @pytest.mark.critical_path
    @pytest.mark.parametrize("kind", CORRUPTION_KINDS)
    def test_seed_dependence(self, clean_batch, kind):
        first = apply_corruption(clean_batch, CorruptionSpec(kind, 5, seed=1))
        second = apply_corruption(clean_batch, CorruptionSpec(kind, 5, seed=2))
        assert torch.equal(first.pixels, second.pixels) == (kind not in NOISE_KINDS)

    @allure.title("{kind} error grows monotonically with severity")
    @pytest.mark.regression
    @pytest.mark.parametrize("kind", ["gaussian_noise", "impulse_noise", "contrast", "brightness"])
    def test_monotone_severity(self, clean_batch, kind):
        errors = [_mse(apply_corruption(clean_batch, CorruptionSpec(kind, level, seed=3)), clean_batch) for level in range(1, 6)]
        assert all(b >= a - 1e-12 for a, b in zip(errors, errors[1:])), errors
        assert errors[-1] > errors[0]

    @allure.title("{kind} is stronger at severity 5 than at severity 1")
    @pytest.mark.regression
    @pytest.mark.parametrize("kind", ["shot_noise", "defocus_blur", "motion_blur", "pixelate", "jpeg_like"])
    def test_severity_extremes(self, clean_batch, kind):
        mild = _mse(apply_corruption(clean_batch, CorruptionSpec(kind, 1, seed=3)), clean_batch)
        strong = _mse(apply_corruption(clean_batch, CorruptionSpec(kind, 5, seed=3)), clean_batch)
        assert strong > mild

    @allure.title("Filters leave a constant image unchanged")
    @pytest.mark.regression
    @pytest.mark.parametrize("kind", ["defocus_blur", "motion_blur", "pixelate"])
    def test_constant_image(self, kind, get_test_name):
        flat = ImageBatch(pixels=torch.full((2, 16, 16, 3), 0.4))
        out = apply_corruption(flat, CorruptionSpec(kind, 5))
        self.assertions.assert_tensors_close(out.pixels, flat.pixels, 1e-6, get_test_name, what=kind)

    @allure.title("Brightness adds the severity offset")
    @pytest.mark.extended
    def test_brightness_offset(self, get_test_name):
        flat = ImageBatch(pixels=torch.full((1, 4, 4, 3), 0.2))
        out = apply_corruption(flat, CorruptionSpec("brightness", 2))
        self.assertions.assert_tensors_close(out.pixels, torch.full((1, 4, 4, 3), 0.2 + severity_parameter("brightness", 2)), 1e-6, get_test_name)

    @allure.title("Contrast keeps the per-image mean")
    @pytest.mark.extended
    def test_contrast_mean(self, get_test_name):
        pixels = 0.25 + 0.5 * torch.rand(3, 8, 8, 3, generator=torch.Generator().manual_seed(0))
        out = apply_corruption(ImageBatch(pixels=pixels), CorruptionSpec("contrast", 4))
        self.assertions.assert_tensors_close(out.pixels.mean(dim=(1, 2, 3)), pixels.mean(dim=(1, 2, 3)), 1e-6, get_test_name)

    @allure.title("Explicit parameter overrides the severity table")
    @pytest.mark.extended
    def test_parameter_override(self, clean_batch):
        out = apply_corruption(clean_batch, CorruptionSpec("gaussian_noise", 5, seed=9), parameter=0.0)
        assert torch.equal(out.pixels, clean_batch.pixels.clamp(0, 1))

    @allure.title("Unknown kind and bad severity are rejected")
    @pytest.mark.extended
    def test_invalid(self, clean_batch):
        with pytest.raises(UnknownKind):
            apply_corruption(clean_batch, CorruptionSpec("fog", 1))
        with pytest.raises(ValueError):
            severity_parameter("contrast", 0)


@allure.epic("Corruptions: kernels")
class TestKernels:
    assertions = Assertions()

    @allure.title("Disk kernel is normalised and symmetric")
    @pytest.mark.smoke
    @pytest.mark.parametrize("radius", [1, 2, 4, 6])
    def test_disk(self, radius, get_test_name):
        kernel = disk_kernel(radius, dtype=torch.float64)
        assert kernel.shape == (2 * radius + 1, 2 * radius + 1)
        self.assertions.assert_close(kernel.sum(), 1.0, 1e-12, get_test_name)
        assert torch.equal(kernel, kernel.flip(0)) and torch.equal(kernel, kernel.T)
        assert kernel[0, 0] == 0

    @allure.title("Radius-1 disk is a five-point cross")
    @pytest.mark.extended
    def test_disk_cross(self):
        kernel = disk_kernel(1, dtype=torch.float64) * 5
        expected = torch.tensor([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=torch.float64)
        assert torch.equal(kernel, expected)

    @allure.title("Motion kernel is a normalised line at the given angle")
    @pytest.mark.smoke
    @pytest.mark.parametrize("length", [3, 5, 12])
    def test_motion(self, length, get_test_name):
        kernel = motion_kernel(length, 45.0, dtype=torch.float64)
        self.assertions.assert_close(kernel.sum(), 1.0, 1e-12, get_test_name)
        assert int((kernel > 0).sum()) == length
        assert torch.equal(kernel, torch.eye(length, dtype=torch.float64).flip(0) / length)
        horizontal = motion_kernel(length, 0.0, dtype=torch.float64)
        assert int((horizontal[length // 2] > 0).sum()) == length

    @allure.title("Unsupported angle raises ValueError")
    @pytest.mark.extended
    def test_motion_angle(self):
        with pytest.raises(ValueError):
            motion_kernel(5, 30.0)
