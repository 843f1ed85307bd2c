"""Determinantal point process core.

The selection model places a probability on every subset Y of the ground
set of candidate segments:

    P(Y) = det(L_Y) / det(L + I)

where the ensemble matrix decomposes as L_ij = q_i * S_ij * q_j into a
per-item quality score q_i and a pairwise similarity S_ij. Quality is
parameterized log-linearly, q_i = exp(theta . f_i / 2), which keeps L
positive semi-definite for any parameter vector and makes the
log-likelihood of labeled subsets concave with a closed-form gradient:

    grad = sum_{i in Yhat} f_i  -  sum_i K_ii f_i,     K = L (L + I)^{-1}

Training is plain gradient ascent with a per-iteration projection of each
ensemble onto the PSD cone as a numerical safeguard. Inference greedily
adds the segment with the best log-determinant gain that still fits the
word budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "QualityModel",
    "TrainingInstance",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "NumericalError",
    "MODEL_FORMAT_VERSION",
    "quality_scores",
    "build_L",
    "subset_log_prob",
    "log_likelihood",
    "grad_log_likelihood",
    "project_psd",
    "train",
    "map_select",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1

# Cholesky pivots below this are treated as an exactly singular submatrix.
PIVOT_FLOOR = 1e-12

NEG_INF = float("-inf")


class TrainingDivergedError(RuntimeError):
    """Likelihood fell for many consecutive iterations; step size too large."""


class NumericalError(RuntimeError):
    """An eigensolver or factorization failed to converge."""


@dataclass
class QualityModel:
    """Learned parameters mapping segment features to quality scores."""

    theta: np.ndarray
    pyramid_dim: int = 0

    @property
    def feature_dim(self) -> int:
        return int(self.theta.shape[0])


@dataclass(frozen=True)
class TrainingInstance:
    """One labeled topic: features, similarity, and the ground-truth subset."""

    features: np.ndarray  # (n, d)
    similarity: np.ndarray  # (n, n)
    selected: tuple[int, ...]
    topic_id: str = ""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    max_iters: int = 200
    tol: float = 1e-5
    # Abort once the likelihood has dropped this many iterations in a row.
    divergence_patience: int = 10


@dataclass
class TrainResult:
    model: QualityModel
    trace: list[float] = field(default_factory=list)
    skipped_instances: int = 0
    iterations: int = 0


def quality_scores(theta: np.ndarray, features: np.ndarray) -> np.ndarray:
    """q_i = exp(theta . f_i / 2); positive for any finite features."""
    return np.exp(0.5 * (features @ theta))


def build_L(q: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Ensemble matrix L_ij = q_i S_ij q_j."""
    q = np.asarray(q, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if q.ndim != 1 or S.shape != (q.shape[0], q.shape[0]):
        raise ValueError(f"dimension mismatch: q has {q.shape}, S has {S.shape}")
    if np.any(q <= 0):
        raise ValueError("quality scores must be strictly positive")
    return S * np.outer(q, q)


def _logdet_psd(M: np.ndarray) -> float:
    """log det of a PSD matrix via Cholesky; -inf when numerically singular.

    The empty matrix has determinant 1, hence log-determinant 0.
    """
    n = M.shape[0]
    if n == 0:
        return 0.0
    try:
        chol = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return NEG_INF
    diag = np.diagonal(chol)
    if np.any(diag * diag < PIVOT_FLOOR):
        return NEG_INF
    return float(2.0 * np.sum(np.log(diag)))


def subset_log_prob(L: np.ndarray, Y: Sequence[int]) -> float:
    """log P(Y; L) = log det(L_Y) - log det(L + I).

    Returns -inf (not an exception) when L_Y is numerically singular.
    """
    idx = list(Y)
    numer = _logdet_psd(L[np.ix_(idx, idx)])
    if numer == NEG_INF:
        return NEG_INF
    denom = _logdet_psd(L + np.eye(L.shape[0]))
    return numer - denom


def project_psd(M: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix: clamp negative eigenvalues to zero.

    The input is symmetrized first; the output is idempotent under
    re-projection.
    """
    sym = 0.5 * (M + M.T)
    try:
        eigvals, eigvecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition failed on a {sym.shape[0]}x{sym.shape[0]} matrix "
            f"(fro norm {np.linalg.norm(sym):.3e})"
        ) from exc
    clipped = np.clip(eigvals, 0.0, None)
    out = (eigvecs * clipped) @ eigvecs.T
    return 0.5 * (out + out.T)


def _instance_terms(
    theta: np.ndarray, inst: TrainingInstance, safeguard: bool = True
) -> tuple[float, np.ndarray | None]:
    """Log-probability and gradient contribution of one instance.

    A singular labeled submatrix yields (-inf, None); such instances are
    skipped by training (they contribute zero gradient) and counted.
    """
    q = quality_scores(theta, inst.features)
    L = build_L(q, inst.similarity)
    if safeguard:
        L = project_psd(L)
    idx = list(inst.selected)
    numer = _logdet_psd(L[np.ix_(idx, idx)])
    if numer == NEG_INF:
        return NEG_INF, None
    identity = np.eye(L.shape[0])
    denom = _logdet_psd(L + identity)
    logp = numer - denom
    # K = L (L+I)^{-1}; its diagonal holds marginal inclusion probabilities.
    K = np.linalg.solve((L + identity).T, L.T).T
    grad = inst.features[idx].sum(axis=0) - inst.features.T @ np.diagonal(K)
    return logp, grad


def log_likelihood(model: QualityModel, instances: Sequence[TrainingInstance]) -> float:
    """Sum of labeled-subset log-probabilities under the current parameters."""
    total = 0.0
    for inst in instances:
        logp, _ = _instance_terms(model.theta, inst)
        total += logp
    return total


def grad_log_likelihood(
    model: QualityModel, instances: Sequence[TrainingInstance]
) -> np.ndarray:
    """Analytic likelihood gradient; singular instances contribute zero."""
    grad = np.zeros_like(model.theta)
    for inst in instances:
        _, g = _instance_terms(model.theta, inst)
        if g is not None:
            grad += g
    return grad


def train(
    instances: Sequence[TrainingInstance],
    config: TrainConfig = TrainConfig(),
    pyramid_dim: int = 0,
) -> TrainResult:
    """Gradient ascent from theta = 0 with fixed step size.

    Each iteration rebuilds every instance's ensemble matrix, projects it
    onto the PSD cone, and accumulates likelihood and gradient. Stops when
    the max-norm of the gradient drops below tol or max_iters is reached.
    Raises TrainingDivergedError when the likelihood decreases for
    divergence_patience consecutive iterations.
    """
    if not instances:
        raise ValueError("need at least one training instance")
    dim = instances[0].features.shape[1]
    theta = np.zeros(dim)
    result = TrainResult(QualityModel(theta, pyramid_dim))
    consecutive_drops = 0

    for iteration in range(config.max_iters):
        total = 0.0
        grad = np.zeros(dim)
        skipped = 0
        for inst in instances:
            logp, g = _instance_terms(theta, inst)
            if g is None:
                skipped += 1
                continue
            total += logp
            grad += g
        result.skipped_instances = skipped
        if result.trace and total < result.trace[-1]:
            consecutive_drops += 1
            if consecutive_drops >= config.divergence_patience:
                raise TrainingDivergedError(
                    f"likelihood decreased for {consecutive_drops} consecutive "
                    f"iterations at learning rate {config.learning_rate}; "
                    "reduce the step size"
                )
        else:
            consecutive_drops = 0
        result.trace.append(total)
        result.iterations = iteration + 1
        if float(np.max(np.abs(grad))) < config.tol:
            break
        theta = theta + config.learning_rate * grad

    result.model = QualityModel(theta, pyramid_dim)
    return result


def map_select(
    L: np.ndarray, word_counts: Sequence[int], budget: int
) -> list[int]:
    """Greedy MAP subset under a word budget.

    Repeatedly adds the item with the largest positive log-determinant
    gain among items that still fit the remaining budget; exact ties keep
    the lowest index, so callers supplying items in document order get
    document-order tie-breaking. May return an empty list.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    n = L.shape[0]
    selected: list[int] = []
    in_set = np.zeros(n, dtype=bool)
    remaining = budget
    current = 0.0  # log det of the empty selection

    while True:
        best_j = -1
        best_gain = 0.0
        for j in range(n):
            if in_set[j] or word_counts[j] > remaining:
                continue
            trial = selected + [j]
            cand = _logdet_psd(L[np.ix_(trial, trial)])
            if cand == NEG_INF:
                continue
            gain = cand - current
            if gain > best_gain:
                best_gain = gain
                best_j = j
        if best_j < 0:
            break
        selected.append(best_j)
        in_set[best_j] = True
        remaining -= word_counts[best_j]
        current += best_gain
    return selected


def save_model(model: QualityModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "theta": [float(x) for x in model.theta],
                "feature_dim": model.feature_dim,
                "pyramid_dim": model.pyramid_dim,
                "format_version": MODEL_FORMAT_VERSION,
            },
            fh,
        )
        fh.write("\n")


def load_model(path: str) -> QualityModel:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version: {version!r}")
    theta = np.asarray(raw["theta"], dtype=np.float64)
    if theta.shape[0] != raw["feature_dim"]:
        raise ValueError("model feature_dim does not match theta length")
    return QualityModel(theta, raw.get("pyramid_dim", 0))
