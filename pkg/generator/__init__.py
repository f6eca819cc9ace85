from generator.bank_generator import BankGenerator
from generator.image_generator import ImageGenerator

__all__ = ["BankGenerator", "ImageGenerator"]
