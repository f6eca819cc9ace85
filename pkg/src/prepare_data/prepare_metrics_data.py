from dataclasses import asdict
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from data.diagnostics_dataclass import DiagnosticsReport
from data.loss_dataclass import METRICS_COLUMNS, MetricsRecord
from src.prepare_data.prepare_basic_data import BaseReportData
from src.schemas import GetReportSchemas

SUMMARY_COLUMNS = ["kind", "preset", "mean_accuracy", "std_accuracy", "n_seeds", "mean_posthoc_accuracy", "no_adapt_accuracy"]
SWEEP_COLUMNS = ["value", "mean", "std"]
PROJECTION_COLUMNS = ["set", "x", "y"]
EVAL_COLUMNS = ["kind", "accuracy", "mean_entropy", "uniformity_metric", "emd_modality_gap", "mutual_information", "histogram"]
CORRUPTION_TYPE_COLUMNS = ["kind", "accuracy"]


class PrepareMetricsData(BaseReportData):
    """
    Преобразование метрик адаптации и сводных таблиц в CSV и обратно.
    """

    @classmethod
    def write_metrics_csv(cls, records: Sequence[MetricsRecord], path: Union[str, Path]) -> Path:
        return cls.write_csv(path, METRICS_COLUMNS, [asdict(record) for record in records])

    @classmethod
    def read_metrics_csv(cls, path: Union[str, Path]):
        return cls.read_csv(path, GetReportSchemas.metrics_row, METRICS_COLUMNS)

    @classmethod
    def write_summary_csv(cls, rows, path: Union[str, Path]) -> Path:
        return cls.write_csv(path, SUMMARY_COLUMNS, [row.model_dump() for row in rows])

    @classmethod
    def read_summary_csv(cls, path: Union[str, Path]):
        return cls.read_csv(path, GetReportSchemas.summary_row, SUMMARY_COLUMNS)

    @classmethod
    def write_sweep_csv(cls, rows, path: Union[str, Path]) -> Path:
        return cls.write_csv(path, SWEEP_COLUMNS, [row.model_dump() for row in rows])

    @classmethod
    def read_sweep_csv(cls, path: Union[str, Path]):
        return cls.read_csv(path, GetReportSchemas.sweep_row, SWEEP_COLUMNS)

    @classmethod
    def write_projection_csv(cls, image_points: np.ndarray, text_points: np.ndarray, path: Union[str, Path]) -> Path:
        rows = [{"set": "image", "x": float(x), "y": float(y)} for x, y in image_points]
        rows += [{"set": "text", "x": float(x), "y": float(y)} for x, y in text_points]
        return cls.write_csv(path, PROJECTION_COLUMNS, rows)

    @classmethod
    def read_projection_csv(cls, path: Union[str, Path]):
        return cls.read_csv(path, GetReportSchemas.projection_row, PROJECTION_COLUMNS)

    @staticmethod
    def eval_row(kind: str, report: DiagnosticsReport) -> dict:
        row = asdict(report)
        row["kind"] = kind
        row["histogram"] = ";".join(str(count) for count in report.histogram)
        return row

    @classmethod
    def write_eval_csv(cls, rows: Sequence[dict], path: Union[str, Path]) -> Path:
        return cls.write_csv(path, EVAL_COLUMNS, rows)

    @classmethod
    def read_eval_csv(cls, path: Union[str, Path]):
        return cls.read_csv(path, GetReportSchemas.eval_row, EVAL_COLUMNS)
