import allure
import pytest
import torch

from services.adaptation_service import build_optimizer, optimizer_step
from src.assertions import Assertions
from src.errors import ShapeMismatch
from src.schemas.config_schema import TTAConfig


def _param(values):
    return torch.tensor(values, dtype=torch.float64, requires_grad=True)


@allure.epic("Adaptation: AdamW step")
class TestOptimizerStep:
    assertions = Assertions()

    @allure.title("Zero gradient and zero decay leave parameters unchanged")
    @pytest.mark.smoke
    def test_null_step(self):
        theta = _param([0.3, -1.2, 2.0])
        before = theta.detach().clone()
        optimizer = build_optimizer([theta], TTAConfig(weight_decay=0.0))
        for _ in range(3):
            optimizer_step(optimizer, [theta], [torch.zeros(3, dtype=torch.float64)])
        assert torch.equal(theta.detach(), before)

    @allure.title("First step with unit gradient moves by the learning rate")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.critical_path
    def test_first_step(self, get_test_name):
        theta = _param([1.0])
        cfg = TTAConfig(weight_decay=0.0)
        optimizer = build_optimizer([theta], cfg)
        optimizer_step(optimizer, [theta], [torch.ones(1, dtype=torch.float64)])
        self.assertions.assert_close(theta.item(), 1.0 - cfg.lr / (1.0 + cfg.eps), 1e-12, get_test_name)
        self.assertions.assert_close(theta.item(), 1.0 - cfg.lr, 1e-9, get_test_name)

    @allure.title("Decoupled decay shrinks by (1 - lr * wd) per step")
    @pytest.mark.critical_path
    def test_pure_decay(self, get_test_name):
        theta = _param([2.0, -4.0])
        cfg = TTAConfig(lr=0.01, weight_decay=0.5)
        optimizer = build_optimizer([theta], cfg)
        for _ in range(5):
            optimizer_step(optimizer, [theta], [torch.zeros(2, dtype=torch.float64)])
        factor = (1 - cfg.lr * cfg.weight_decay) ** 5
        self.assertions.assert_tensors_close(theta.detach(), torch.tensor([2.0, -4.0], dtype=torch.float64) * factor, 1e-12, get_test_name)

    @allure.title("Moments live in the optimizer state with parameter shapes")
    @pytest.mark.regression
    def test_moments(self):
        theta = _param([[1.0, 2.0], [3.0, 4.0]])
        optimizer = build_optimizer([theta], TTAConfig())
        optimizer_step(optimizer, [theta], [torch.ones(2, 2, dtype=torch.float64)])
        state = optimizer.state[theta]
        assert state["exp_avg"].shape == theta.shape and state["exp_avg_sq"].shape == theta.shape
        assert int(state["step"]) == 1
        assert theta.grad is None

    @allure.title("Gradient shape mismatch raises ShapeMismatch")
    @pytest.mark.extended
    def test_shape_mismatch(self):
        theta = _param([1.0, 2.0])
        optimizer = build_optimizer([theta], TTAConfig())
        with pytest.raises(ShapeMismatch):
            optimizer_step(optimizer, [theta], [torch.ones(3, dtype=torch.float64)])

    @allure.title("TTA config enforces its invariants")
    @pytest.mark.extended
    @pytest.mark.parametrize("update", [{"lr": -0.1}, {"momentum": 0.0}, {"momentum": 1.0}, {"batch_size": 1}])
    def test_config_invariants(self, update):
        with pytest.raises(ValueError):
            TTAConfig(**update)
