"""Modality gap, spherical-PCA projection and per-batch metric collection."""
from typing import Literal, Optional

import numpy as np
import ot
import torch
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from data.diagnostics_dataclass import DiagnosticsReport
from data.embedding_dataclass import EmbeddingBatch, PredictionBatch, PrototypeBank
from src.errors import DegenerateSpectrum, EmptySet
from src.hypersphere import batch_accuracy
from src.logger import get_logger
from src.objectives import entropy_loss, mutual_information, uniformity_metric

logger = get_logger(__name__)

EXACT_LIMIT = 512
SUBSAMPLE_DRAWS = 5


def ground_cost(a: np.ndarray, b: np.ndarray, ground: Literal["euclidean", "geodesic"] = "euclidean") -> np.ndarray:
    if ground == "euclidean":
        return cdist(a, b, metric="euclidean")
    if ground == "geodesic":
        return np.arccos(np.clip(a @ b.T, -1.0, 1.0))
    raise ValueError(f"unknown ground cost '{ground}'")


def emd_points(a: np.ndarray, b: np.ndarray, ground: str = "euclidean") -> float:
    """
    Exact transport cost between uniform-weight point clouds.

    Equal sizes reduce to an assignment problem; otherwise the transportation
    LP is solved by network simplex.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("both point sets must be nonempty")
    cost = ground_cost(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), ground)
    if len(a) == len(b):
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].sum() / len(a))
    weights_a = np.full(len(a), 1.0 / len(a))
    weights_b = np.full(len(b), 1.0 / len(b))
    return float(ot.emd2(weights_a, weights_b, cost))


def modality_gap_emd(
    images: EmbeddingBatch,
    texts: PrototypeBank,
    ground: str = "euclidean",
    seed: int = 0,
) -> float:
    a = images.data.detach().cpu().double().numpy()
    b = texts.prototypes.detach().cpu().double().numpy()
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("both point sets must be nonempty")
    if len(a) <= EXACT_LIMIT and len(b) <= EXACT_LIMIT:
        return emd_points(a, b, ground)

    rng = np.random.default_rng(seed)
    costs = []
    for _ in range(SUBSAMPLE_DRAWS):
        sub_a = a[rng.choice(len(a), EXACT_LIMIT, replace=False)] if len(a) > EXACT_LIMIT else a
        sub_b = b[rng.choice(len(b), EXACT_LIMIT, replace=False)] if len(b) > EXACT_LIMIT else b
        costs.append(emd_points(sub_a, sub_b, ground))
    return float(np.mean(costs))


def spherical_pca_project(z: EmbeddingBatch, t: PrototypeBank) -> tuple[np.ndarray, np.ndarray]:
    """
    Projects image and text embeddings onto the top-2 principal plane of the
    combined centred set, then radially onto the unit circle.
    """
    a = z.data.detach().cpu().double().numpy()
    b = t.prototypes.detach().cpu().double().numpy()
    combined = np.concatenate([a, b], axis=0)
    if len(combined) < 3:
        raise EmptySet(f"spherical PCA needs at least 3 points, got {len(combined)}")

    centred = combined - combined.mean(axis=0, keepdims=True)
    covariance = centred.T @ centred / len(combined)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    top = eigenvalues[order[:2]]
    if np.all(top < 1e-10):
        raise DegenerateSpectrum(f"top-2 eigenvalues {top.tolist()} are below 1e-10")
    basis = eigenvectors[:, order[:2]]

    planar = centred @ basis
    norms = np.linalg.norm(planar, axis=1, keepdims=True)
    zero = norms[:, 0] < 1e-12
    if zero.any():
        logger.warning(f"{int(zero.sum())} points project to the origin, mapped to angle 0")
    circle = np.where(zero[:, None], np.array([[1.0, 0.0]]), planar / np.where(zero[:, None], 1.0, norms))
    return circle[: len(a)], circle[len(a):]


def collect_batch_metrics(
    z: EmbeddingBatch,
    pred: PredictionBatch,
    bank: PrototypeBank,
    truth: Optional[torch.Tensor] = None,
    ground: str = "euclidean",
    seed: int = 0,
) -> DiagnosticsReport:
    """
    Aggregate shift diagnostics of one batch or stream. A histogram with all
    mass on one class flags a collapsed solution.
    """
    histogram = torch.bincount(pred.labels.cpu(), minlength=bank.C).tolist()
    with torch.no_grad():
        mean_entropy = float(entropy_loss(pred))
        mi = float(mutual_information(pred))
    return DiagnosticsReport(
        mean_entropy=mean_entropy,
        uniformity_metric=uniformity_metric(z),
        emd_modality_gap=modality_gap_emd(z, bank, ground=ground, seed=seed),
        histogram=histogram,
        mutual_information=mi,
        accuracy=batch_accuracy(pred, truth) if truth is not None else None,
    )
