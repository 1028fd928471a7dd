"""The co-training loop: confident pseudo-label exchange between two view classifiers.

Round structure (after supervised initialization of both classifiers on the
labeled set):

1. Both classifiers score every instance still in the unlabeled pool; a
   prediction whose confidence strictly exceeds ``tau_pseudo`` becomes a
   candidate pseudo-label for the *other* view's training set.
2. Each view keeps its top ``k_pseudo`` candidates by confidence.
3. If neither view kept anything, the round is recorded and the loop stops
   (before any retraining, so a no-op run leaves the supervised baseline
   untouched).
4. View 1 retrains on labeled + its selections with the agreement penalty
   against the frozen view 2, restricted to pool instances where the frozen
   peer's confidence strictly exceeds ``tau_agree``; then view 2 retrains the
   same way against the freshly updated view 1.
5. Selected instances leave the pool. By default selections feed only this
   round's training set; ``accumulate_pseudo=True`` keeps all past selections
   in every later round.

Oracle labels are consulted only for metrics (test error, per-round
pseudo-label accuracy), never for training decisions.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .classifier import (
    TrainConfig,
    ViewClassifier,
    evaluate_error,
    new_classifier,
    predict_proba,
    train,
)
from .data import ConfigError, Dataset, MultimodalInstance, stack_view
from .theory import disagreement_rate

__all__ = [
    "CoTrainConfig",
    "PseudoLabelRecord",
    "RoundMetrics",
    "LemmaReport",
    "harvest_pseudo_labels",
    "select_top_k",
    "initial_classifiers",
    "run_cotraining",
    "one_step_lemma_experiment",
    "save_trajectory",
    "save_records",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = (
    "round",
    "err_view1",
    "err_view2",
    "err_max",
    "disagreement",
    "pool_size",
    "added_view1",
    "added_view2",
    "pseudo_accuracy",
)


@dataclass(frozen=True)
class CoTrainConfig:
    """Loop-level knobs; ``lambda_agree`` here overrides the nested train config's."""

    rounds: int = 10
    tau_pseudo: float = 0.8
    tau_agree: float = 0.5
    k_pseudo: int = 20
    lambda_agree: float = 0.1
    accumulate_pseudo: bool = False
    train: TrainConfig = TrainConfig()
    seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.rounds, int) and self.rounds >= 1):
            raise ConfigError(f"rounds must be a positive integer, got {self.rounds}")
        if not 0.5 <= self.tau_pseudo < 1.0:
            raise ConfigError(f"tau_pseudo must lie in [0.5, 1), got {self.tau_pseudo}")
        if not 0.5 <= self.tau_agree < 1.0:
            raise ConfigError(f"tau_agree must lie in [0.5, 1), got {self.tau_agree}")
        if not (isinstance(self.k_pseudo, int) and self.k_pseudo >= 1):
            raise ConfigError(f"k_pseudo must be a positive integer, got {self.k_pseudo}")
        if self.lambda_agree < 0:
            raise ConfigError(f"lambda_agree must be >= 0, got {self.lambda_agree}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class PseudoLabelRecord:
    """One pseudo-label: produced by source_view, consumed by the other view."""

    instance_id: int
    source_view: int
    assigned_to_view: int
    label: int
    confidence: float
    round: int
    oracle_correct: bool

    def __post_init__(self) -> None:
        if self.assigned_to_view != 3 - self.source_view:
            raise ValueError("pseudo-labels must cross views: assigned_to_view == 3 - source_view")


@dataclass(frozen=True)
class RoundMetrics:
    """Trajectory record for one round (round 0 is the initialization state).

    ``disagreement`` is measured on the pool as it stands after the round (the
    full pool for round 0) and is NaN once the pool is empty. ``pseudo_accuracy``
    is the oracle accuracy of this round's selections, NaN when nothing was
    selected. ``err_labeled`` is the larger of the two views' 0-1 errors on the
    visible labeled set; it feeds the per-round bound evaluation and is not part
    of the nine-column trajectory schema.
    """

    round: int
    err_view1: float
    err_view2: float
    err_max: float
    disagreement: float
    pool_size: int
    added_view1: int
    added_view2: int
    pseudo_accuracy: float
    err_labeled: float

    def __post_init__(self) -> None:
        for name in ("err_view1", "err_view2", "err_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.err_max != max(self.err_view1, self.err_view2):
            raise ValueError("err_max must equal max(err_view1, err_view2)")


@dataclass(frozen=True)
class LemmaReport:
    """Outcome of the single-step peer-teaching experiment."""

    eps1_before: float
    eps2: float
    eps1_after: float
    improved: bool
    n_pseudo: int
    precondition_violated: bool


def harvest_pseudo_labels(
    clf1: ViewClassifier,
    clf2: ViewClassifier,
    pool: Sequence[MultimodalInstance],
    tau_pseudo: float,
    round_index: int = 0,
) -> tuple[list[PseudoLabelRecord], list[PseudoLabelRecord]]:
    """Collect confident predictions from each view as candidates for the other.

    Returns (candidates assigned to view 1, candidates assigned to view 2). An
    instance may appear in both lists, with possibly conflicting labels; any
    resolution happens at selection time.
    """
    if len(pool) == 0:
        return [], []
    out: dict[int, list[PseudoLabelRecord]] = {1: [], 2: []}
    for source_view, clf in ((1, clf1), (2, clf2)):
        probs = predict_proba(clf, stack_view(pool, source_view))
        conf = np.maximum(probs, 1.0 - probs)
        labels = (probs >= 0.5).astype(int)
        for inst, p, c, lab in zip(pool, probs, conf, labels):
            if c > tau_pseudo:
                out[3 - source_view].append(
                    PseudoLabelRecord(
                        instance_id=inst.id,
                        source_view=source_view,
                        assigned_to_view=3 - source_view,
                        label=int(lab),
                        confidence=float(c),
                        round=round_index,
                        oracle_correct=(inst.oracle_label is not None and int(lab) == inst.oracle_label),
                    )
                )
    return out[1], out[2]


def select_top_k(candidates: Sequence[PseudoLabelRecord], k: int) -> list[PseudoLabelRecord]:
    """Up to k records by (confidence desc, instance_id asc); duplicate ids kept once."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(candidates, key=lambda r: (-r.confidence, r.instance_id))
    seen: set[int] = set()
    picked: list[PseudoLabelRecord] = []
    for rec in ranked:
        if rec.instance_id in seen:
            continue
        seen.add(rec.instance_id)
        picked.append(rec)
        if len(picked) == k:
            break
    return picked


def _labeled_pairs(instances: Sequence[MultimodalInstance], view: int) -> list[tuple[np.ndarray, int]]:
    return [(getattr(i, f"view{view}"), int(i.oracle_label)) for i in instances]


def initial_classifiers(ds: Dataset, cfg: CoTrainConfig) -> tuple[ViewClassifier, ViewClassifier]:
    """Supervised-only initialization of both views on the labeled set."""
    if len(ds.labeled) == 0:
        raise ValueError("labeled set must be non-empty")
    tcfg = replace(cfg.train, lambda_agree=cfg.lambda_agree, seed=cfg.seed)
    out = []
    for view in (1, 2):
        dim = ds.labeled[0].view1.size if view == 1 else ds.labeled[0].view2.size
        clf = new_classifier(view, dim, prob_clip=cfg.train.prob_clip, seed=cfg.seed)
        out.append(train(clf, _labeled_pairs(ds.labeled, view), [], [], tcfg))
    return out[0], out[1]


def _pool_disagreement(clf1: ViewClassifier, clf2: ViewClassifier, pool: Sequence[MultimodalInstance]) -> float:
    return disagreement_rate(clf1, clf2, pool) if len(pool) > 0 else math.nan


def _metrics(
    round_index: int,
    clf1: ViewClassifier,
    clf2: ViewClassifier,
    ds: Dataset,
    pool: Sequence[MultimodalInstance],
    added1: int,
    added2: int,
    selected: Sequence[PseudoLabelRecord],
) -> RoundMetrics:
    e1 = evaluate_error(clf1, ds.test, 1)
    e2 = evaluate_error(clf2, ds.test, 2)
    acc = math.nan
    if selected:
        acc = float(np.mean([r.oracle_correct for r in selected]))
    err_labeled = max(evaluate_error(clf1, ds.labeled, 1), evaluate_error(clf2, ds.labeled, 2))
    return RoundMetrics(
        round=round_index,
        err_view1=e1,
        err_view2=e2,
        err_max=max(e1, e2),
        disagreement=_pool_disagreement(clf1, clf2, pool),
        pool_size=len(pool),
        added_view1=added1,
        added_view2=added2,
        pseudo_accuracy=acc,
        err_labeled=err_labeled,
    )


def run_cotraining(
    ds: Dataset,
    cfg: CoTrainConfig,
    delta0: float = 0.02,
) -> tuple[ViewClassifier, ViewClassifier, list[RoundMetrics], list[PseudoLabelRecord]]:
    """Run the full loop; returns both classifiers, the trajectory, and the selected records.

    Initial test error at or above 0.5 - delta0 on either view only warns: the
    convergence claims need that precondition, the loop itself does not.
    """
    if len(ds.labeled) == 0:
        raise ValueError("labeled set must be non-empty")
    clf1, clf2 = initial_classifiers(ds, cfg)

    for view, clf in ((1, clf1), (2, clf2)):
        err = evaluate_error(clf, ds.test, view)
        if err >= 0.5 - delta0:
            warnings.warn(
                f"initial view-{view} test error {err:.3f} is not better than random by "
                f"margin delta0={delta0:g}; the contraction claims may not apply",
                stacklevel=2,
            )

    tcfg = replace(cfg.train, lambda_agree=cfg.lambda_agree, seed=cfg.seed)
    pool: list[MultimodalInstance] = list(ds.unlabeled)
    accumulated: dict[int, list[tuple[np.ndarray, int]]] = {1: [], 2: []}
    selected_ever: set[int] = set()
    trajectory = [_metrics(0, clf1, clf2, ds, pool, 0, 0, [])]
    records: list[PseudoLabelRecord] = []

    for round_index in range(1, cfg.rounds + 1):
        cand1, cand2 = harvest_pseudo_labels(clf1, clf2, pool, cfg.tau_pseudo, round_index)
        sel = {1: select_top_k(cand1, cfg.k_pseudo), 2: select_top_k(cand2, cfg.k_pseudo)}
        if not sel[1] and not sel[2]:
            trajectory.append(_metrics(round_index, clf1, clf2, ds, pool, 0, 0, []))
            break

        by_id = {inst.id: inst for inst in pool}
        fresh: dict[int, list[tuple[np.ndarray, int]]] = {}
        for view in (1, 2):
            fresh[view] = [
                (getattr(by_id[r.instance_id], f"view{view}"), r.label) for r in sel[view]
            ]

        clfs = {1: clf1, 2: clf2}
        for view in (1, 2):
            peer = clfs[3 - view]
            peer_probs = predict_proba(peer, stack_view(pool, 3 - view))
            peer_conf = np.maximum(peer_probs, 1.0 - peer_probs)
            gate = peer_conf > cfg.tau_agree
            own = stack_view(pool, view)[gate]
            batch = _labeled_pairs(ds.labeled, view) + fresh[view]
            if cfg.accumulate_pseudo:
                batch += accumulated[view]
            clfs[view] = train(clfs[view], batch, list(own), peer_probs[gate].tolist(), tcfg)
        clf1, clf2 = clfs[1], clfs[2]

        picked_ids = {r.instance_id for r in sel[1]} | {r.instance_id for r in sel[2]}
        if picked_ids & selected_ever:
            raise RuntimeError("internal invariant broken: an instance was selected twice")
        selected_ever |= picked_ids
        pool = [inst for inst in pool if inst.id not in picked_ids]
        if cfg.accumulate_pseudo:
            for view in (1, 2):
                accumulated[view] += fresh[view]

        this_round = sel[1] + sel[2]
        records += this_round
        trajectory.append(
            _metrics(round_index, clf1, clf2, ds, pool, len(sel[1]), len(sel[2]), this_round)
        )
    return clf1, clf2, trajectory, records


def one_step_lemma_experiment(ds: Dataset, cfg: CoTrainConfig, handicap: int) -> LemmaReport:
    """Single exchange from a strong view 2 to a handicapped view 1.

    View 1 trains on the first ``handicap`` labeled instances, view 2 on the
    whole labeled set; view 2 then pseudo-labels every pool instance whose
    confidence strictly exceeds ``tau_pseudo``, and view 1 is retrained from the
    same initialization on its subset plus those pseudo-labels. The
    ``precondition_violated`` flag reports when view 2 failed to be strictly
    better than both view 1 and chance, in which case no improvement is claimed.
    """
    if not 1 <= handicap <= len(ds.labeled):
        raise ValueError(f"handicap must lie in [1, {len(ds.labeled)}], got {handicap}")
    subset = ds.labeled[:handicap]
    tcfg = replace(cfg.train, seed=cfg.seed)

    d1 = subset[0].view1.size
    d2 = subset[0].view2.size
    init1 = new_classifier(1, d1, prob_clip=cfg.train.prob_clip, seed=cfg.seed)
    clf1 = train(init1, _labeled_pairs(subset, 1), [], [], tcfg)
    clf2 = train(
        new_classifier(2, d2, prob_clip=cfg.train.prob_clip, seed=cfg.seed),
        _labeled_pairs(ds.labeled, 2),
        [],
        [],
        tcfg,
    )

    eps1_before = evaluate_error(clf1, ds.test, 1)
    eps2 = evaluate_error(clf2, ds.test, 2)
    precondition_violated = not (eps2 < min(eps1_before, 0.5))

    pseudo: list[tuple[np.ndarray, int]] = []
    if len(ds.unlabeled) > 0:
        probs = predict_proba(clf2, stack_view(ds.unlabeled, 2))
        conf = np.maximum(probs, 1.0 - probs)
        labels = (probs >= 0.5).astype(int)
        for inst, c, lab in zip(ds.unlabeled, conf, labels):
            if c > cfg.tau_pseudo:
                pseudo.append((inst.view1, int(lab)))

    clf1_after = train(init1, _labeled_pairs(subset, 1) + pseudo, [], [], tcfg)
    eps1_after = evaluate_error(clf1_after, ds.test, 1)
    return LemmaReport(
        eps1_before=eps1_before,
        eps2=eps2,
        eps1_after=eps1_after,
        improved=eps1_after < eps1_before,
        n_pseudo=len(pseudo),
        precondition_violated=precondition_violated,
    )


def save_trajectory(trajectory: Sequence[RoundMetrics], path: str) -> None:
    """trajectory.csv with the nine standard columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for m in trajectory:
            writer.writerow([repr(getattr(m, col)) if isinstance(getattr(m, col), float) else str(getattr(m, col)) for col in TRAJECTORY_COLUMNS])


def save_records(records: Sequence[PseudoLabelRecord], path: str) -> None:
    """records.csv: one row per selected pseudo-label."""
    cols = ("instance_id", "source_view", "assigned_to_view", "label", "confidence", "round", "oracle_correct")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in records:
            writer.writerow([str(r.instance_id), str(r.source_view), str(r.assigned_to_view), str(r.label), repr(r.confidence), str(r.round), str(r.oracle_correct).lower()])
