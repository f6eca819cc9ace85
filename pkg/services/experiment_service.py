import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Optional, Sequence

import torch

from data.embedding_dataclass import EmbeddingBatch, PrototypeBank
from data.image_dataclass import StreamBatch, ToyDataset
from functions import content_hash, derive_seed
from settings import settings
from src.corruptions import corruption_suite
from src.diagnostics import collect_batch_metrics, spherical_pca_project
from src.encoder import encoder_forward
from src.encoder.vit import ToyViT
from src.errors import EmptyKinds, IoError
from src.hypersphere import batch_accuracy, zero_shot_probs
from src.logger import get_logger
from src.objectives import uniformity_metric
from src.prepare_data.prepare_metrics_data import CORRUPTION_TYPE_COLUMNS, PrepareMetricsData
from src.prompt_bank import load_prototype_bank, load_prototype_source
from src.schemas.config_schema import ExperimentConfig
from src.schemas.metrics_schema import SummaryRowSchema, SweepRowSchema
from services.adaptation_service import AdaptationService, StreamResult, apply_preset
from services.dataset_service import DatasetService
from services.pretrain_service import PretrainService


@dataclass
class RunOutcome:
    kind: str
    seed: int
    result: StreamResult
    no_adapt_accuracy: float
    metrics_path: Path


class ExperimentService:
    """
    Оркестрация экспериментов: повреждение данных, адаптация по потокам, свипы и оценка без адаптации.
    """

    logger = get_logger(__name__)

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Path] = None):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.dataset_service = DatasetService(image_size=config.encoder.image_size)
        self.pretrain_service = PretrainService()
        self._dataset: Optional[ToyDataset] = None
        self._bank: Optional[PrototypeBank] = None
        self._stem: Optional[ToyViT] = None
        # parallelism comes from concurrent streams, never from intra-op threads
        torch.set_num_threads(1)
        if settings.DETERMINISTIC:
            torch.use_deterministic_algorithms(True, warn_only=True)

    # ---- shared inputs ----

    def clean_dataset(self) -> ToyDataset:
        if self._dataset is None:
            if self.config.dataset_path is not None:
                self._dataset = self.dataset_service.load(self.config.dataset_path)
            else:
                toy = self.config.toy_dataset
                self._dataset = self.dataset_service.toy_split(toy.n_samples, self.config.prototypes.classes, toy.seed, "test")
        return self._dataset

    def bank(self) -> PrototypeBank:
        if self._bank is None:
            self._bank = load_prototype_source(
                self.config.prototypes, self.config.encoder.embed_dim, self.clean_dataset().class_names or None
            )
        return self._bank

    def stem(self) -> ToyViT:
        if self._stem is not None:
            return self._stem
        if self.config.stem_checkpoint is not None:
            self._stem = self.pretrain_service.load_stem(self.config.stem_checkpoint)
            return self._stem

        key = content_hash({
            "encoder": self.config.encoder.model_dump(),
            "pretrain": self.config.pretrain.model_dump(),
            "toy": self.config.toy_dataset.model_dump(),
            "prototypes": self.config.prototypes.model_dump(),
            "dataset": self.dataset_service.digest(self.clean_dataset()) if self.config.dataset_path else None,
        })
        path = self.output_dir / "stem" / key[:16]
        if (path / "manifest.json").exists():
            self._stem = self.pretrain_service.load_stem(path)
            return self._stem

        if self.config.dataset_path is not None:
            train = self.clean_dataset()
        else:
            toy = self.config.toy_dataset
            train = self.dataset_service.toy_split(toy.n_train, self.config.prototypes.classes, toy.seed, "train")
        stem = self.pretrain_service.pretrain(self.config.encoder, train, self.bank(), self.config.pretrain)
        clean_accuracy = self.pretrain_service.evaluate(stem, self.clean_dataset(), self.bank())
        self.logger.info(f"Pretrained stem, clean accuracy {clean_accuracy:.4f}")
        self.pretrain_service.save_stem(stem, path, meta={"clean_accuracy": clean_accuracy})
        self._stem = self.pretrain_service.load_stem(path)
        return self._stem

    # ---- corrupt ----

    def _stream_dir(self, kind: str, seed: int) -> Path:
        key = content_hash({
            "dataset": self.dataset_service.digest(self.clean_dataset()),
            "kind": kind,
            "severity": self.config.severity,
            "seed": seed,
            "batch_size": self.config.tta.batch_size,
        })
        return self.output_dir / "corrupted" / f"{kind}-sev{self.config.severity}-seed{seed}-{key[:12]}"

    def corrupted_stream(self, kind: str, seed: int) -> tuple[Path, list[StreamBatch]]:
        path = self._stream_dir(kind, seed)
        if (path / "manifest.json").exists():
            self.logger.info(f"Cache hit for {kind} seed {seed}: {path}")
            return path, self.dataset_service.load_stream(path)
        dataset = self.clean_dataset()
        stream = corruption_suite(dataset, [kind], self.config.severity, seed, self.config.tta.batch_size)[kind]
        self.dataset_service.save_stream(stream, path, meta={
            "kind": kind,
            "severity": self.config.severity,
            "seed": seed,
            "batch_size": self.config.tta.batch_size,
            "source_id": dataset.source_id,
        })
        self.logger.info(f"Wrote corrupted stream {kind} seed {seed} to {path}")
        return path, stream

    def corrupt(self) -> list[Path]:
        if not self.config.kinds:
            raise EmptyKinds("config lists no corruption kinds")
        return [self.corrupted_stream(kind, seed)[0] for kind in self.config.kinds for seed in self.config.seeds]

    # ---- run ----

    def no_adapt_accuracy(self, stream: Sequence[StreamBatch]) -> float:
        correct, seen = 0, 0
        with torch.no_grad():
            for item in stream:
                pred = zero_shot_probs(encoder_forward(item.images, self.stem()), self.bank())
                correct += int((pred.labels == item.labels.long()).sum())
                seen += item.images.B
        return correct / seen

    def _run_one(self, config: ExperimentConfig, kind: str, seed: int, run_dir: Path) -> RunOutcome:
        _, stream = self.corrupted_stream(kind, seed)
        tta_cfg = config.tta.model_copy(update={
            "balance": apply_preset(config.tta.balance, config.preset),
            "seed": seed,
        })
        lora_cfg = config.lora.model_copy(update={"seed": derive_seed(seed, "lora", config.lora.seed)})
        engine = AdaptationService(self.stem(), self.bank(), tta_cfg, lora_cfg)
        metrics_path = run_dir / kind / f"seed{seed}.csv"
        result = engine.run_stream(stream, metrics_path=metrics_path, checkpoint_dir=run_dir / kind / f"seed{seed}-checkpoint")
        return RunOutcome(kind, seed, result, self.no_adapt_accuracy(stream), metrics_path)

    def run_all(self, config: ExperimentConfig, run_dir: Path) -> list[RunOutcome]:
        if not config.kinds:
            raise EmptyKinds("config lists no corruption kinds")
        # shared inputs are built once, before any worker starts
        self.stem()
        self.bank()
        tasks = [(kind, seed) for kind in config.kinds for seed in config.seeds]
        for kind, seed in tasks:
            self.corrupted_stream(kind, seed)
        if settings.THREADS > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=settings.THREADS) as pool:
                futures = [pool.submit(self._run_one, config, kind, seed, run_dir) for kind, seed in tasks]
                return [future.result() for future in futures]
        return [self._run_one(config, kind, seed, run_dir) for kind, seed in tasks]

    @staticmethod
    def summarize(outcomes: Sequence[RunOutcome], preset: str) -> list[SummaryRowSchema]:
        rows = []
        for kind in dict.fromkeys(outcome.kind for outcome in outcomes):
            runs = [outcome for outcome in outcomes if outcome.kind == kind]
            accuracies = [run.result.online_accuracy for run in runs]
            posthoc = [run.result.posthoc_accuracy for run in runs if run.result.posthoc_accuracy is not None]
            rows.append(SummaryRowSchema(
                kind=kind,
                preset=preset,
                mean_accuracy=statistics.fmean(accuracies),
                std_accuracy=statistics.pstdev(accuracies),
                n_seeds=len(runs),
                mean_posthoc_accuracy=statistics.fmean(posthoc) if posthoc else None,
                no_adapt_accuracy=statistics.fmean(run.no_adapt_accuracy for run in runs),
            ))
        return rows

    def run(self) -> Path:
        run_dir = self.output_dir / "runs" / self.config.preset
        outcomes = self.run_all(self.config, run_dir)
        rows = self.summarize(outcomes, self.config.preset)
        for row in rows:
            self.logger.info(
                f"{row.kind} [{row.preset}]: {row.mean_accuracy:.4f} ± {row.std_accuracy:.4f} "
                f"over {row.n_seeds} seeds, no-adapt {row.no_adapt_accuracy:.4f}"
            )
        return PrepareMetricsData.write_summary_csv(rows, run_dir / "summary.csv")

    # ---- sweep ----

    def sweep(self, param: Literal["lambda", "i0"], values: Sequence[float]) -> Path:
        values = [float(value) for value in values]
        if not values:
            raise ValueError("sweep needs at least one value")
        unique = list(dict.fromkeys(values))
        if len(unique) != len(values):
            self.logger.warning(f"Duplicate sweep values dropped: {values} -> {unique}")

        field = {"lambda": "lam", "i0": "i0"}[param]
        rows = []
        for value in unique:
            balance = self.config.tta.balance.model_copy(update={field: value})
            config = self.config.model_copy(update={"tta": self.config.tta.model_copy(update={"balance": balance})})
            outcomes = self.run_all(config, self.output_dir / "sweep" / param / repr(value))
            per_kind = [row.mean_accuracy for row in self.summarize(outcomes, config.preset)]
            rows.append(SweepRowSchema(value=value, mean=statistics.fmean(per_kind), std=statistics.pstdev(per_kind)))
            self.logger.info(f"Sweep {param}={value}: mean {rows[-1].mean:.4f} ± {rows[-1].std:.4f}")
        return PrepareMetricsData.write_sweep_csv(rows, self.output_dir / "sweep" / f"{param}.csv")

    # ---- eval ----

    def embed_stream(self, stream: Sequence[StreamBatch]) -> tuple[EmbeddingBatch, torch.Tensor]:
        with torch.no_grad():
            data = torch.cat([encoder_forward(item.images, self.stem()).data for item in stream])
        return EmbeddingBatch(data), torch.cat([item.labels for item in stream])

    def _evaluate_stream(self, kind: str, stream: Sequence[StreamBatch], eval_dir: Path) -> dict:
        z, labels = self.embed_stream(stream)
        pred = zero_shot_probs(z, self.bank())
        report = collect_batch_metrics(z, pred, self.bank(), labels, seed=derive_seed(self.config.seeds[0], "emd", kind))
        # averaged at the adaptation batch size, comparable with the metrics CSV
        uniformity = statistics.fmean(
            uniformity_metric(EmbeddingBatch(z.data[start:start + self.config.tta.batch_size]))
            for start in range(0, z.B, self.config.tta.batch_size)
            if min(self.config.tta.batch_size, z.B - start) >= 2
        )
        image_points, text_points = spherical_pca_project(z, self.bank())
        PrepareMetricsData.write_projection_csv(image_points, text_points, eval_dir / f"spca_{kind}.csv")
        if max(report.histogram) == z.B:
            self.logger.warning(f"All {z.B} predictions on {kind} fall into one class")
        return PrepareMetricsData.eval_row(kind, replace(report, uniformity_metric=uniformity))

    def evaluate(self, corruption_bank: Optional[Path] = None) -> Path:
        """No-adapt evaluation of the clean set and of every corrupted stream of the first seed."""
        eval_dir = self.output_dir / "eval"
        seed = self.config.seeds[0]
        streams = {"clean": self.dataset_service.batch_stream(self.clean_dataset(), self.config.tta.batch_size)}
        for kind in self.config.kinds:
            streams[kind] = self.corrupted_stream(kind, seed)[1]

        rows = [self._evaluate_stream(kind, stream, eval_dir) for kind, stream in streams.items()]
        for row in rows:
            self.logger.info(f"No-adapt {row['kind']}: accuracy {row['accuracy']:.4f}, uniformity {row['uniformity_metric']:.4f}")
        if corruption_bank is not None:
            self.evaluate_corruption_types(Path(corruption_bank), {k: v for k, v in streams.items() if k != "clean"}, eval_dir)
        return PrepareMetricsData.write_eval_csv(rows, eval_dir / "eval.csv")

    def evaluate_corruption_types(self, archive: Path, streams: dict[str, Sequence[StreamBatch]], eval_dir: Path) -> Path:
        """Zero-shot recognition of the corruption type against imported corruption-prompt embeddings."""
        if not archive.exists():
            raise IoError(f"corruption prompt archive not found: {archive}")
        bank = load_prototype_bank(archive, self.config.prototypes.temperature)
        rows = []
        for kind, stream in streams.items():
            if kind not in bank.class_names:
                self.logger.warning(f"No corruption prompts for {kind} in {archive}, skipped")
                continue
            z, _ = self.embed_stream(stream)
            pred = zero_shot_probs(z, bank)
            truth = torch.full((z.B,), bank.class_names.index(kind), dtype=torch.long)
            rows.append({"kind": kind, "accuracy": batch_accuracy(pred, truth)})
        return PrepareMetricsData.write_csv(eval_dir / "corruption_types.csv", CORRUPTION_TYPE_COLUMNS, rows)
