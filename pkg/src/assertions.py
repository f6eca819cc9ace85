from typing import Optional

import torch

from src.logger import get_logger


class Assertions:
    """
    Класс для проверки утверждений (assertions) в тестах.
    Ошибка сначала пишется в лог теста, затем выполняется assert.
    """

    @staticmethod
    def assert_close(actual: float, expected: float, tolerance: float, test_name: Optional[str] = None, what: str = "value"):
        actual, expected = float(actual), float(expected)
        if abs(actual - expected) > tolerance:
            get_logger(test_name).error(f"Expected {what} {expected} within {tolerance} but got {actual} instead")
        assert abs(actual - expected) <= tolerance, (
            f"Expected {what} {expected} within {tolerance} but got {actual} instead"
        )

    @staticmethod
    def assert_tensors_close(actual: torch.Tensor, expected: torch.Tensor, tolerance: float, test_name: Optional[str] = None, what: str = "tensor"):
        if actual.shape != expected.shape:
            get_logger(test_name).error(f"Expected {what} shape {tuple(expected.shape)} but got {tuple(actual.shape)} instead")
        assert actual.shape == expected.shape, f"Expected {what} shape {tuple(expected.shape)} but got {tuple(actual.shape)}"
        deviation = (actual.detach().double() - expected.detach().double()).abs().max().item() if actual.numel() else 0.0
        if deviation > tolerance:
            get_logger(test_name).error(f"Max-abs deviation of {what} is {deviation}, tolerance {tolerance}")
        assert deviation <= tolerance, f"Max-abs deviation of {what} is {deviation}, tolerance {tolerance}"

    @staticmethod
    def assert_in_range(actual: float, low: float, high: float, test_name: Optional[str] = None, what: str = "value"):
        actual = float(actual)
        if not low <= actual <= high:
            get_logger(test_name).error(f"Expected {what} in [{low}, {high}] but got {actual} instead")
        assert low <= actual <= high, f"Expected {what} in [{low}, {high}] but got {actual} instead"

    @staticmethod
    def assert_unit_rows(matrix: torch.Tensor, tolerance: float = 1e-5, test_name: Optional[str] = None):
        deviation = (matrix.detach().double().norm(dim=-1) - 1.0).abs().max().item()
        if deviation > tolerance:
            get_logger(test_name).error(f"Row norms deviate from 1 by {deviation}")
        assert deviation <= tolerance, f"Row norms deviate from 1 by {deviation}"
