"""Per-view logistic-linear classifiers with a supervised and an agreement loss.

One classifier sees one view. Probabilities are clamped to
``[prob_clip, 1 - prob_clip]`` so the cross-entropy stays bounded by
``-ln(prob_clip)`` plus the ridge term. The agreement loss is the mean squared
difference between this classifier's probability and a frozen peer probability
on the same instances; its gradient flows only to this classifier's weights.

Training is plain full-batch gradient descent, deterministic from the seed used
at weight initialization. The documented stability threshold is
``lr <= 4 / (lambda_max(S) + 2 * l2)`` with ``S`` the empirical second-moment
matrix of the bias-augmented supervised inputs; exceeding it only warns.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .data import ConfigError, MultimodalInstance, oracle_labels, stack_view

__all__ = [
    "DivergenceError",
    "TrainConfig",
    "ViewClassifier",
    "Prediction",
    "new_classifier",
    "predict",
    "predict_proba",
    "pseudo_label",
    "supervised_loss_grad",
    "agreement_loss_grad",
    "train",
    "evaluate_error",
    "stability_threshold",
    "save_classifier",
    "load_classifier",
]

INIT_SCALE = 0.01


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or non-finite weights."""


@dataclass(frozen=True)
class TrainConfig:
    """Full-batch gradient-descent settings for one classifier."""

    learning_rate: float = 0.5
    epochs: int = 200
    l2_penalty: float = 0.0
    lambda_agree: float = 0.0
    prob_clip: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs}")
        if self.l2_penalty < 0:
            raise ConfigError(f"l2_penalty must be >= 0, got {self.l2_penalty}")
        if self.lambda_agree < 0:
            raise ConfigError(f"lambda_agree must be >= 0, got {self.lambda_agree}")
        if not 0.0 < self.prob_clip < 0.5:
            raise ConfigError(f"prob_clip must lie in (0, 0.5), got {self.prob_clip}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class ViewClassifier:
    """Linear probabilistic classifier for one view; weights[-1] is the bias."""

    view_index: int
    weights: np.ndarray
    prob_clip: float = 1e-3

    def __post_init__(self) -> None:
        if self.view_index not in (1, 2):
            raise ValueError(f"view_index must be 1 or 2, got {self.view_index}")
        if not 0.0 < self.prob_clip < 0.5:
            raise ValueError(f"prob_clip must lie in (0, 0.5), got {self.prob_clip}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a 1-D vector of length dim + 1")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size - 1


@dataclass(frozen=True)
class Prediction:
    """Clamped positive-class probability with its confidence and argmax label."""

    prob_positive: float
    confidence: float
    label: int

    def __post_init__(self) -> None:
        if self.label != (1 if self.prob_positive >= 0.5 else 0):
            raise ValueError("label must be 1 exactly when prob_positive >= 0.5")
        if self.confidence != max(self.prob_positive, 1.0 - self.prob_positive):
            raise ValueError("confidence must equal max(prob_positive, 1 - prob_positive)")


def new_classifier(view_index: int, dim: int, prob_clip: float = 1e-3, seed: int = 0) -> ViewClassifier:
    """Fresh classifier with N(0, 0.01^2) weights from PCG64 keyed by (seed, view)."""
    rng = np.random.default_rng([seed, view_index])
    weights = INIT_SCALE * rng.standard_normal(dim + 1)
    return ViewClassifier(view_index=view_index, weights=weights, prob_clip=prob_clip)


def _augment(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.hstack([x, np.ones((x.shape[0], 1))])


def _forward(weights: np.ndarray, x_aug: np.ndarray, prob_clip: float):
    """Raw sigmoid, clamped probability, and the not-clamped mask."""
    s = expit(x_aug @ weights)
    p = np.clip(s, prob_clip, 1.0 - prob_clip)
    active = (s > prob_clip) & (s < 1.0 - prob_clip)
    return s, p, active


def predict_proba(clf: ViewClassifier, x: np.ndarray) -> np.ndarray:
    """Clamped positive-class probabilities for one vector or an (n, d) matrix."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != clf.dim:
        raise ValueError(f"input dimension {x.shape[1]} does not match classifier dimension {clf.dim}")
    _, p, _ = _forward(clf.weights, _augment(x), clf.prob_clip)
    return p


def predict(clf: ViewClassifier, x: np.ndarray) -> Prediction:
    """Single-instance prediction; prob >= 0.5 maps to label 1 (documented tie-break)."""
    p = float(predict_proba(clf, x)[0])
    return Prediction(prob_positive=p, confidence=max(p, 1.0 - p), label=1 if p >= 0.5 else 0)


def pseudo_label(p: Prediction) -> int:
    """Argmax label of a prediction (>= 0.5 breaks toward 1)."""
    return 1 if p.prob_positive >= 0.5 else 0


def _as_xy(batch: Sequence[tuple[np.ndarray, int]]) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = zip(*batch)
    return np.stack([np.asarray(x, dtype=np.float64) for x in xs]), np.asarray(ys, dtype=np.float64)


def _sup_loss_grad(weights, x_aug, y, prob_clip, l2):
    s, p, active = _forward(weights, x_aug, prob_clip)
    n = x_aug.shape[0]
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    reg_w = weights.copy()
    reg_w[-1] = 0.0
    loss += l2 * float(reg_w @ reg_w)
    # clamping flattens the loss, so clamped samples contribute zero gradient
    dz = np.where(active, s - y, 0.0)
    grad = x_aug.T @ dz / n + 2.0 * l2 * reg_w
    return loss, grad


def _agree_loss_grad(weights, x_aug, peer_probs, prob_clip):
    if x_aug.shape[0] == 0:
        return 0.0, np.zeros_like(weights)
    s, p, active = _forward(weights, x_aug, prob_clip)
    n = x_aug.shape[0]
    diff = p - peer_probs
    loss = float(np.mean(diff * diff))
    dz = np.where(active, 2.0 * diff * s * (1.0 - s), 0.0)
    grad = x_aug.T @ dz / n
    return loss, grad


def supervised_loss_grad(
    clf: ViewClassifier,
    batch: Sequence[tuple[np.ndarray, int]],
    l2: float,
) -> tuple[float, np.ndarray]:
    """Mean clamped cross-entropy plus ridge on the non-bias weights, with its exact gradient.

    The clamp bounds the loss by ``-ln(prob_clip) + l2 * ||w||^2``.
    """
    if len(batch) == 0:
        raise ValueError("supervised batch must be non-empty")
    if l2 < 0:
        raise ValueError(f"l2 must be >= 0, got {l2}")
    x, y = _as_xy(batch)
    if x.shape[1] != clf.dim:
        raise ValueError(f"batch dimension {x.shape[1]} does not match classifier dimension {clf.dim}")
    return _sup_loss_grad(clf.weights, _augment(x), y, clf.prob_clip, l2)


def agreement_loss_grad(
    clf: ViewClassifier,
    own_inputs: Sequence[np.ndarray],
    frozen_peer_probs: Sequence[float],
) -> tuple[float, np.ndarray]:
    """Mean squared probability gap against frozen peer outputs; gradient w.r.t. own weights only."""
    if len(own_inputs) != len(frozen_peer_probs):
        raise ValueError(
            f"own_inputs ({len(own_inputs)}) and frozen_peer_probs ({len(frozen_peer_probs)}) differ in length"
        )
    if len(own_inputs) == 0:
        return 0.0, np.zeros_like(clf.weights)
    q = np.asarray(frozen_peer_probs, dtype=np.float64)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("frozen peer probabilities must lie in [0, 1]")
    x = np.stack([np.asarray(v, dtype=np.float64) for v in own_inputs])
    if x.shape[1] != clf.dim:
        raise ValueError(f"input dimension {x.shape[1]} does not match classifier dimension {clf.dim}")
    return _agree_loss_grad(clf.weights, _augment(x), q, clf.prob_clip)


def stability_threshold(inputs: np.ndarray, l2: float) -> float:
    """Documented safe learning-rate bound 4 / (lambda_max(S) + 2*l2) for the supervised batch."""
    x_aug = _augment(inputs)
    second_moment = x_aug.T @ x_aug / x_aug.shape[0]
    lam_max = float(np.linalg.eigvalsh(second_moment)[-1])
    return 4.0 / (lam_max + 2.0 * l2)


def train(
    clf: ViewClassifier,
    labeled_batchset: Sequence[tuple[np.ndarray, int]],
    agree_inputs: Sequence[np.ndarray],
    frozen_peer_probs: Sequence[float],
    cfg: TrainConfig,
) -> ViewClassifier:
    """Full-batch gradient descent on  L_sup + lambda_agree * L_agree  for cfg.epochs steps.

    Returns a new classifier; the input is untouched. Raises DivergenceError
    naming the epoch and learning rate if the total loss goes non-finite.
    """
    if len(labeled_batchset) == 0:
        raise ValueError("labeled batch must be non-empty")
    if len(agree_inputs) != len(frozen_peer_probs):
        raise ValueError(
            f"agree_inputs ({len(agree_inputs)}) and frozen_peer_probs ({len(frozen_peer_probs)}) differ in length"
        )
    x_sup, y = _as_xy(labeled_batchset)
    if x_sup.shape[1] != clf.dim:
        raise ValueError(f"batch dimension {x_sup.shape[1]} does not match classifier dimension {clf.dim}")
    xa_sup = _augment(x_sup)

    use_agree = cfg.lambda_agree > 0 and len(agree_inputs) > 0
    if use_agree:
        q = np.asarray(frozen_peer_probs, dtype=np.float64)
        xa_agree = _augment(np.stack([np.asarray(v, dtype=np.float64) for v in agree_inputs]))
        if xa_agree.shape[1] != xa_sup.shape[1]:
            raise ValueError("agreement inputs do not match the classifier dimension")

    lr = cfg.learning_rate
    safe_lr = stability_threshold(x_sup, cfg.l2_penalty)
    if lr > safe_lr:
        warnings.warn(
            f"learning_rate {lr:g} exceeds the stability threshold {safe_lr:g}; "
            "the loss may not decrease monotonically",
            stacklevel=2,
        )

    w = clf.weights.copy()
    w.setflags(write=True)
    # overflow to inf is the divergence signal, not an anomaly; isfinite below handles it
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            loss, grad = _sup_loss_grad(w, xa_sup, y, clf.prob_clip, cfg.l2_penalty)
            if use_agree:
                a_loss, a_grad = _agree_loss_grad(w, xa_agree, q, clf.prob_clip)
                loss += cfg.lambda_agree * a_loss
                grad = grad + cfg.lambda_agree * a_grad
            if not np.isfinite(loss):
                raise DivergenceError(f"total loss became non-finite at epoch {epoch} (learning_rate={lr:g})")
            w -= lr * grad
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"weights became non-finite after epoch {cfg.epochs} (learning_rate={lr:g})")
    return ViewClassifier(view_index=clf.view_index, weights=w, prob_clip=clf.prob_clip)


def evaluate_error(clf: ViewClassifier, oracle_set: Sequence[MultimodalInstance], view: int) -> float:
    """Fraction of oracle-labeled instances the classifier mislabels on the given view."""
    if len(oracle_set) == 0:
        raise ValueError("cannot evaluate on an empty set")
    x = stack_view(oracle_set, view)
    y = oracle_labels(oracle_set)
    p = predict_proba(clf, x)
    labels = (p >= 0.5).astype(np.int64)
    return float(np.mean(labels != y))


def save_classifier(clf: ViewClassifier, path: str) -> None:
    """Checkpoint as one CSV row; 17 significant digits round-trip float64 exactly."""
    header = ["view_index", "prob_clip"] + [f"w_{i}" for i in range(clf.weights.size)]
    row = [str(clf.view_index), format(clf.prob_clip, ".17g")] + [format(w, ".17g") for w in clf.weights]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(row)


def load_classifier(path: str) -> ViewClassifier:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        row = next(reader)
    if header[:2] != ["view_index", "prob_clip"]:
        raise ValueError(f"unexpected checkpoint header: {header[:2]}")
    return ViewClassifier(
        view_index=int(row[0]),
        weights=np.array([float(v) for v in row[2:]]),
        prob_clip=float(row[1]),
    )
