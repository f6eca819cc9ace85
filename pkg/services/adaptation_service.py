import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import torch

from data import get_preset
from data.adapter_dataclass import LoRAParams, TeacherState
from data.embedding_dataclass import PredictionBatch, PrototypeBank
from data.image_dataclass import ImageBatch, StreamBatch
from data.loss_dataclass import MetricsRecord
from src.encoder import encoder_forward, ema_update, init_lora, make_teacher
from src.encoder.vit import ToyViT
from src.errors import BatchTooSmall, EmptyStream, LengthMismatch, NonFiniteLoss, ShapeMismatch
from src.hypersphere import batch_accuracy, zero_shot_probs
from src.logger import get_logger
from src.objectives import composite_loss, marginal_entropy, uniformity_metric
from src.prepare_data.prepare_metrics_data import PrepareMetricsData
from src.schemas.config_schema import BalanceConfig, LoRAConfig, TTAConfig
from src.tensor_archive import read_archive, read_sidecar, write_archive


@dataclass
class TTAState:
    student: LoRAParams
    teacher: TeacherState
    optimizer: torch.optim.AdamW
    step: int = 0


@dataclass
class StreamResult:
    state: TTAState
    records: list[MetricsRecord] = field(default_factory=list)
    online_accuracy: Optional[float] = None
    posthoc_accuracy: Optional[float] = None
    n_seen: int = 0


def apply_preset(balance: BalanceConfig, name: str) -> BalanceConfig:
    """Overlays the switches of an ablation preset; λ and I₀ are kept."""
    preset = get_preset(name)
    return balance.model_copy(update={
        "unif_enabled": preset.unif_enabled,
        "pl_enabled": preset.pl_enabled,
        "balancing_enabled": preset.balancing_enabled,
    })


def build_optimizer(params: Sequence[torch.Tensor], cfg: TTAConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        list(params),
        lr=cfg.lr,
        betas=(cfg.beta1, cfg.beta2),
        eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )


def optimizer_step(optimizer: torch.optim.Optimizer, params: Sequence[torch.Tensor], grads: Sequence[Optional[torch.Tensor]]) -> None:
    """
    Installs ``grads`` on ``params`` and advances the optimizer by one step.

    Moments and the step counter live in ``optimizer.state``.
    """
    params, grads = list(params), list(grads)
    if len(params) != len(grads):
        raise LengthMismatch(f"{len(params)} parameters vs {len(grads)} gradients")
    for param, grad in zip(params, grads):
        if grad is None:
            grad = torch.zeros_like(param)
        if grad.shape != param.shape:
            raise ShapeMismatch(f"gradient shape {tuple(grad.shape)} != parameter shape {tuple(param.shape)}")
        param.grad = grad.detach().to(param.dtype)
    optimizer.step()
    optimizer.zero_grad(set_to_none=True)


class AdaptationService:
    """
    Потоковая адаптация LoRA-адаптеров: студент обучается, EMA-учитель предсказывает.
    """

    logger = get_logger(__name__)

    def __init__(self, stem: ToyViT, bank: PrototypeBank, cfg: TTAConfig, lora_cfg: LoRAConfig):
        self.stem = stem.eval()
        for param in self.stem.parameters():
            param.requires_grad_(False)
        self.bank = bank
        self.cfg = cfg
        self.lora_cfg = lora_cfg

    def init_state(self) -> TTAState:
        dtype = next(self.stem.parameters()).dtype
        student = init_lora(self.lora_cfg, self.stem.cfg, dtype)
        teacher = make_teacher(student, self.cfg.momentum)
        return TTAState(student=student, teacher=teacher, optimizer=build_optimizer(student.tensors(), self.cfg))

    def predict(self, images: ImageBatch, lora: Optional[LoRAParams] = None) -> PredictionBatch:
        with torch.no_grad():
            return zero_shot_probs(encoder_forward(images, self.stem, lora), self.bank)

    def tta_step(
        self,
        state: TTAState,
        batch: ImageBatch,
        truth: Optional[torch.Tensor] = None,
    ) -> tuple[TTAState, MetricsRecord, PredictionBatch]:
        """
        One adaptation step. The returned prediction is the teacher's, made
        before this batch updates anything.
        """
        if batch.B < 2:
            raise BatchTooSmall(f"adaptation needs B >= 2, got {batch.B}")
        if truth is not None and len(truth) != batch.B:
            raise LengthMismatch(f"{batch.B} images vs {len(truth)} labels")

        z = encoder_forward(batch, self.stem, state.student)
        student_pred = zero_shot_probs(z, self.bank)
        teacher_pred = self.predict(batch, state.teacher.ema_params)

        losses = composite_loss(z, student_pred, teacher_pred, self.cfg.balance)
        if not math.isfinite(float(losses.total.detach())):
            raise NonFiniteLoss(f"non-finite loss at step {state.step}: {losses.as_floats()}")

        params = state.student.tensors()
        grads = torch.autograd.grad(losses.total, params, allow_unused=True)
        optimizer_step(state.optimizer, params, grads)
        teacher = ema_update(state.teacher, state.student)

        with torch.no_grad():
            record = MetricsRecord(
                step=state.step,
                loss_ent=float(losses.ent.detach()),
                loss_unif=float(losses.unif.detach()),
                loss_pl=float(losses.pl.detach()),
                mi=losses.mi,
                w=losses.w,
                acc_teacher=batch_accuracy(teacher_pred, truth) if truth is not None else None,
                acc_student=batch_accuracy(student_pred, truth) if truth is not None else None,
                uniformity_metric=uniformity_metric(z),
                marginal_entropy=float(marginal_entropy(student_pred.detach())),
            )
        new_state = TTAState(student=state.student, teacher=teacher, optimizer=state.optimizer, step=state.step + 1)
        return new_state, record, teacher_pred.detach()

    def posthoc_accuracy(self, stream: Sequence[StreamBatch], lora: LoRAParams) -> Optional[float]:
        """Second pass over the stream with the final teacher adapters."""
        correct, seen = 0, 0
        for item in stream:
            if item.labels is None:
                return None
            pred = self.predict(item.images, lora)
            correct += int((pred.labels.cpu() == item.labels.cpu().long()).sum())
            seen += item.images.B
        return correct / seen if seen else None

    def run_stream(
        self,
        stream: Iterable[StreamBatch],
        state: Optional[TTAState] = None,
        metrics_path: Optional[Path] = None,
        checkpoint_dir: Optional[Path] = None,
    ) -> StreamResult:
        stream = list(stream)
        if not stream:
            raise EmptyStream("stream yielded no batches")
        state = state or self.init_state()
        result = StreamResult(state=state)
        correct, seen, labelled = 0, 0, True

        for index, item in enumerate(stream):
            if item.images.B < 2:
                self.logger.warning(f"Skipping batch {index} of size {item.images.B}, uniformity needs pairs")
                continue
            try:
                state, record, pred = self.tta_step(state, item.images, item.labels)
            except NonFiniteLoss:
                if checkpoint_dir is not None:
                    dump = Path(f"{checkpoint_dir}-nonfinite")
                    self.save_checkpoint(state, dump)
                    self.logger.error(f"Non-finite loss at batch {index}, state dumped to {dump}")
                raise
            result.records.append(record)
            if record.acc_teacher is None:
                labelled = False
            else:
                correct += int((pred.labels.cpu() == item.labels.cpu().long()).sum())
            seen += item.images.B

        if not result.records:
            raise EmptyStream("every batch of the stream was too small to adapt on")
        result.state = state
        result.n_seen = seen
        if labelled:
            result.online_accuracy = correct / seen
            if self.cfg.eval_mode == "posthoc":
                result.posthoc_accuracy = self.posthoc_accuracy(stream, state.teacher.ema_params)
        self.logger.info(
            f"Adapted on {len(result.records)} batches ({seen} images), "
            f"online accuracy {result.online_accuracy}, post-hoc accuracy {result.posthoc_accuracy}"
        )

        if metrics_path is not None:
            PrepareMetricsData.write_metrics_csv(result.records, metrics_path)
        if checkpoint_dir is not None:
            self.save_checkpoint(state, checkpoint_dir)
        return result

    def save_checkpoint(self, state: TTAState, path: Path) -> Path:
        tensors = {f"student.{k}": v.detach() for k, v in state.student.named_tensors().items()}
        tensors.update({f"teacher.{k}": v for k, v in state.teacher.ema_params.named_tensors().items()})
        meta = {
            "step": state.step,
            "scale": state.student.scale,
            "momentum": state.teacher.momentum,
            "rank": self.lora_cfg.rank,
            "targets": list(self.lora_cfg.targets),
        }
        return write_archive(path, tensors, sidecars={"checkpoint.json": meta})

    @staticmethod
    def load_checkpoint(path: Path) -> tuple[LoRAParams, LoRAParams]:
        """Returns (student, teacher) adapters stored by ``save_checkpoint``."""
        tensors = read_archive(path)
        meta = read_sidecar(path, "checkpoint.json")
        parts = {"student": {}, "teacher": {}}
        for name, tensor in tensors.items():
            owner, rest = name.split(".", 1)
            parts[owner][rest] = tensor
        return (
            LoRAParams.from_named_tensors(parts["student"], meta["scale"]),
            LoRAParams.from_named_tensors(parts["teacher"], meta["scale"]),
        )
