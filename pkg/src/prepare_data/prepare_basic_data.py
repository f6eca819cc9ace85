import csv
import io
from pathlib import Path
from typing import Iterable, Sequence, Type, TypeVar, Union

import allure
from pydantic import BaseModel

from functions import atomic_write_text
from src.errors import IoError, ParseError
from src.validator import Validator

T = TypeVar("T", bound=BaseModel)


class BaseReportData:
    """
    Базовый класс для подготовки CSV/SVG-отчетов.
    Включает форматирование строк, атомарную запись и прикрепление файлов к Allure-отчетам.
    """

    @staticmethod
    def format_value(value) -> str:
        # repr keeps every float bit, so identical runs give identical files
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return str(value)

    @classmethod
    def rows_to_csv(cls, columns: Sequence[str], rows: Iterable[dict]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([cls.format_value(row.get(column)) for column in columns])
        return buffer.getvalue()

    @classmethod
    def write_csv(cls, path: Union[str, Path], columns: Sequence[str], rows: Iterable[dict]) -> Path:
        return atomic_write_text(path, cls.rows_to_csv(columns, rows))

    @staticmethod
    def read_csv(path: Union[str, Path], model: Type[T], columns: Sequence[str]) -> list[T]:
        """Parses a report CSV; header problems are line 1, data rows keep their file line."""
        path = Path(path)
        if not path.exists():
            raise IoError(f"report not found: {path}")
        with open(path, newline="", encoding="utf-8") as file:
            reader = csv.DictReader(file)
            missing = [column for column in columns if column not in (reader.fieldnames or [])]
            if missing:
                raise ParseError(f"{path}: missing columns {missing}", line=1)
            return [Validator.validate_row(row, model, reader.line_num, str(path)) for row in reader]

    @staticmethod
    def attach_csv(path: Union[str, Path], name: str = None):
        path = Path(path)
        allure.attach.file(str(path), name=name or path.name, attachment_type=allure.attachment_type.CSV)

    @staticmethod
    def attach_svg(path: Union[str, Path], name: str = None):
        path = Path(path)
        allure.attach.file(str(path), name=name or path.name, attachment_type=allure.attachment_type.SVG)

    @staticmethod
    def attach_json(body: str, name: str):
        allure.attach(name=name, body=body, attachment_type=allure.attachment_type.JSON)
