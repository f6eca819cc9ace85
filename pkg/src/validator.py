from pathlib import Path
from typing import Type, TypeVar, Union
from pydantic import ValidationError, BaseModel
from src.errors import ConfigError, IoError, ParseError
from src.logger import get_logger

# TypeVar для типизации Pydantic-моделей
T = TypeVar("T", bound=BaseModel)


class Validator:
    """
    Класс для валидации JSON-документов (конфигурации, манифесты) с помощью Pydantic-моделей.
    """

    logger = get_logger(__name__)

    @staticmethod
    def validate_json(text: str, model: Type[T], source: str = "<string>") -> T:
        """
        Валидирует JSON-текст по указанной Pydantic-модели.

        Args:
            text: JSON-документ.
            model: Pydantic-модель (класс).
            source: Имя источника для сообщений об ошибках.

        Returns:
            Экземпляр Pydantic-модели.

        Raises:
            ConfigError: Если документ не соответствует модели.
        """
        try:
            return model.model_validate_json(text or "{}")
        except ValidationError as ex:
            Validator.logger.error(f"{source}: {ex}")
            raise ConfigError(f"{source} failed validation against {model.__name__}: {ex}") from ex

    @staticmethod
    def validate_config(path: Union[str, Path, None], model: Type[T]) -> T:
        """
        Загружает и валидирует файл конфигурации. Отсутствующий путь означает конфигурацию по умолчанию.
        """
        if path is None:
            return model()
        path = Path(path)
        if not path.exists():
            Validator.logger.error(f"Config file not found: {path}")
            raise IoError(f"config file not found: {path}")
        return Validator.validate_json(path.read_text(encoding="utf-8"), model, source=str(path))

    @staticmethod
    def validate_manifest(path: Path, model: Type[T]) -> T:
        if not path.exists():
            Validator.logger.error(f"Manifest not found: {path}")
            raise IoError(f"manifest not found: {path}")
        try:
            return model.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as ex:
            Validator.logger.error(f"{path}: {ex}")
            raise ParseError(f"{path}: invalid manifest: {ex}") from ex

    @staticmethod
    def validate_row(row: dict, model: Type[T], line: int, source: str = "<csv>") -> T:
        """
        Валидирует одну строку CSV-отчета; ошибка указывает номер строки.
        """
        try:
            return model.model_validate({k: (v if v != "" else None) for k, v in row.items()})
        except ValidationError as ex:
            Validator.logger.error(f"{source}:{line}: {ex}")
            raise ParseError(f"{source}: {ex.errors()[0]['loc']} {ex.errors()[0]['msg']}", line=line) from ex
