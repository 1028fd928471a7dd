"""Synthetic two-view binary classification data with a tunable dependence knob.

Each instance carries two feature vectors ("views") drawn from class-conditional
Gaussians. A single scalar ``rho`` interpolates between views whose noise is
drawn independently per view (``rho = 0``) and views whose noise comes entirely
from a shared latent factor (``rho = 1``). The per-coordinate marginal variance
is held at ``noise_sigma**2`` for every ``rho``, so dependence is varied without
changing per-view difficulty.

Construction, for label ``y`` and view ``v``::

    x[v] = mu_y[v] + sqrt(1 - rho) * noise_sigma * eps_v + sqrt(rho) * (A_v @ z)

with ``z`` a shared standard-normal latent, ``eps_v`` independent standard
normal, ``mu_1[v] - mu_0[v]`` of length ``class_separation`` along a fixed
direction, and ``A_v`` a fixed mixing matrix whose rows have norm
``noise_sigma``. The two views share mixing rows for matched coordinates, so the
within-class correlation of coordinate ``j`` across views equals ``rho`` exactly
(for ``j < min(dim_view1, dim_view2)``).

All randomness flows through ``numpy.random.default_rng`` (PCG64) seeded from
the config, so every operation here is a pure function of (inputs, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "GeneratorConfig",
    "MultimodalInstance",
    "Dataset",
    "generate_dataset",
    "conditional_dependence_stat",
    "independence_proxy",
    "apply_shift",
    "save_dataset",
    "load_dataset",
    "stack_view",
    "oracle_labels",
]


class ConfigError(ValueError):
    """A configuration value violates its documented bound."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the synthetic two-view generator.

    Parameters
    ----------
    dim_view1, dim_view2 : int
        Feature dimensions of the two views.
    class_separation : float
        Euclidean distance between the class-conditional means, per view.
    noise_sigma : float
        Per-coordinate marginal standard deviation (constant across rho).
    rho : float
        Shared-latent mixing coefficient in [0, 1]. At 0 the views are
        conditionally independent given the label, by construction.
    latent_dim : int
        Dimension of the shared latent factor.
    n_labeled, n_unlabeled, n_test : int
        Partition sizes; n_test >= 1.
    class_balance : float
        P(y = 1), strictly inside (0, 1).
    shift_magnitude : float
        Mean translation used by the distribution-shift stressor.
    seed : int
        64-bit unsigned seed; the sole source of randomness.
    """

    dim_view1: int = 5
    dim_view2: int = 5
    class_separation: float = 3.0
    noise_sigma: float = 1.0
    rho: float = 0.0
    latent_dim: int = 5
    n_labeled: int = 20
    n_unlabeled: int = 500
    n_test: int = 2000
    class_balance: float = 0.5
    shift_magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        _require(self.dim_view1 >= 1, f"dim_view1 must be a positive integer, got {self.dim_view1}")
        _require(self.dim_view2 >= 1, f"dim_view2 must be a positive integer, got {self.dim_view2}")
        _require(self.class_separation > 0, f"class_separation must be > 0, got {self.class_separation}")
        _require(self.noise_sigma > 0, f"noise_sigma must be > 0, got {self.noise_sigma}")
        _require(0.0 <= self.rho <= 1.0, f"rho must lie in [0, 1], got {self.rho}")
        _require(self.latent_dim >= 1, f"latent_dim must be a positive integer, got {self.latent_dim}")
        _require(self.n_labeled >= 0, f"n_labeled must be >= 0, got {self.n_labeled}")
        _require(self.n_unlabeled >= 0, f"n_unlabeled must be >= 0, got {self.n_unlabeled}")
        _require(self.n_test >= 1, f"n_test must be >= 1, got {self.n_test}")
        _require(0.0 < self.class_balance < 1.0, f"class_balance must lie in (0, 1), got {self.class_balance}")
        _require(self.shift_magnitude >= 0, f"shift_magnitude must be >= 0, got {self.shift_magnitude}")
        _require(0 <= self.seed < 2**64, f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class MultimodalInstance:
    """One sample: both view vectors plus the oracle label.

    The oracle label exists on every generated instance; whether training may
    read it is decided by the partition the instance sits in, not by presence.
    """

    id: int
    view1: np.ndarray
    view2: np.ndarray
    oracle_label: int | None

    def __post_init__(self) -> None:
        for name in ("view1", "view2"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if self.oracle_label is not None and self.oracle_label not in (0, 1):
            raise ValueError(f"oracle_label must be 0, 1 or None, got {self.oracle_label}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Disjoint labeled / unlabeled / test partitions from one generator run."""

    labeled: tuple[MultimodalInstance, ...]
    unlabeled: tuple[MultimodalInstance, ...]
    test: tuple[MultimodalInstance, ...]
    config: GeneratorConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "labeled", tuple(self.labeled))
        object.__setattr__(self, "unlabeled", tuple(self.unlabeled))
        object.__setattr__(self, "test", tuple(self.test))
        ids = [inst.id for part in (self.labeled, self.unlabeled, self.test) for inst in part]
        if len(ids) != len(set(ids)):
            raise ValueError("partitions must be disjoint by id")
        for part, expected in (
            ("labeled", self.config.n_labeled),
            ("unlabeled", self.config.n_unlabeled),
            ("test", self.config.n_test),
        ):
            actual = len(getattr(self, part))
            if actual != expected:
                raise ValueError(f"|{part}| = {actual} does not match the config's n_{part} = {expected}")

    @property
    def all_instances(self) -> tuple[MultimodalInstance, ...]:
        return self.labeled + self.unlabeled + self.test


def stack_view(instances: Sequence[MultimodalInstance], view: int) -> np.ndarray:
    """Stack one view of many instances into an (n, d) matrix."""
    if view not in (1, 2):
        raise ValueError(f"view must be 1 or 2, got {view}")
    if not instances:
        return np.empty((0, 0))
    attr = "view1" if view == 1 else "view2"
    return np.stack([getattr(inst, attr) for inst in instances])


def oracle_labels(instances: Sequence[MultimodalInstance]) -> np.ndarray:
    """Oracle label vector; raises if any instance lacks one."""
    labels = [inst.oracle_label for inst in instances]
    if any(lab is None for lab in labels):
        raise ValueError("instances without oracle labels cannot be used here")
    return np.asarray(labels, dtype=np.int64)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_dataset(cfg: GeneratorConfig) -> Dataset:
    """Draw a full dataset from the generator described in the module docstring.

    Deterministic given ``cfg.seed``: structural draws (mean directions, mixing
    matrix) come first, then the per-instance draws, all from one PCG64 stream.
    Instance ids run 0..n-1 with the labeled partition first, then unlabeled,
    then test.
    """
    rng = np.random.default_rng(cfg.seed)
    d1, d2, ld = cfg.dim_view1, cfg.dim_view2, cfg.latent_dim

    u1 = _unit(rng.standard_normal(d1))
    u2 = _unit(rng.standard_normal(d2))
    mixing = rng.standard_normal((max(d1, d2), ld))
    mixing *= cfg.noise_sigma / np.linalg.norm(mixing, axis=1, keepdims=True)
    a1, a2 = mixing[:d1], mixing[:d2]

    n = cfg.n_labeled + cfg.n_unlabeled + cfg.n_test
    y = (rng.random(n) < cfg.class_balance).astype(np.int64)
    z = rng.standard_normal((n, ld))
    e1 = rng.standard_normal((n, d1))
    e2 = rng.standard_normal((n, d2))

    offset = (y - 0.5)[:, None] * cfg.class_separation
    w_indep = np.sqrt(1.0 - cfg.rho) * cfg.noise_sigma
    w_shared = np.sqrt(cfg.rho)
    x1 = offset * u1 + w_indep * e1 + w_shared * (z @ a1.T)
    x2 = offset * u2 + w_indep * e2 + w_shared * (z @ a2.T)

    instances = [
        MultimodalInstance(id=i, view1=x1[i], view2=x2[i], oracle_label=int(y[i]))
        for i in range(n)
    ]
    nl, nu = cfg.n_labeled, cfg.n_unlabeled
    return Dataset(
        labeled=tuple(instances[:nl]),
        unlabeled=tuple(instances[nl : nl + nu]),
        test=tuple(instances[nl + nu :]),
        config=cfg,
    )


def conditional_dependence_stat(ds: Dataset) -> float:
    """Mean absolute within-class correlation of matched coordinates across views.

    For each class and each coordinate ``j < min(d1, d2)``, computes the Pearson
    correlation between ``view1[:, j]`` and ``view2[:, j]`` over the instances of
    that class (all partitions pooled), and averages the absolute values. Serves
    as the empirical dependence proxy; ``1 - stat`` is the independence proxy.
    """
    instances = ds.all_instances
    labels = oracle_labels(instances)
    v1 = stack_view(instances, 1)
    v2 = stack_view(instances, 2)
    d = min(v1.shape[1], v2.shape[1])

    corrs: list[float] = []
    for cls in (0, 1):
        mask = labels == cls
        if int(mask.sum()) < 2:
            raise ValueError(f"need at least 2 instances of class {cls} to estimate within-class correlation")
        a = v1[mask, :d] - v1[mask, :d].mean(axis=0)
        b = v2[mask, :d] - v2[mask, :d].mean(axis=0)
        num = (a * b).sum(axis=0)
        den = np.sqrt((a * a).sum(axis=0) * (b * b).sum(axis=0))
        # degenerate (zero-variance) coordinates contribute no evidence of dependence
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        corrs.extend(np.abs(c).tolist())
    return float(np.mean(corrs))


def independence_proxy(ds: Dataset) -> float:
    """``1 - conditional_dependence_stat(ds)``, the bound calculator's indep input."""
    return 1.0 - conditional_dependence_stat(ds)


def apply_shift(
    ds: Dataset,
    magnitude: float,
    seed: int,
    include_unlabeled: bool = False,
) -> Dataset:
    """Translate the test (optionally also unlabeled) instances by a fixed direction.

    Both views receive ``magnitude`` times a random unit direction derived only
    from ``seed``, so applying the shift twice with the same seed translates by
    ``2 * magnitude`` along the same direction. The labeled set is unchanged.
    """
    if magnitude < 0:
        raise ConfigError(f"shift magnitude must be >= 0, got {magnitude}")
    d1 = ds.config.dim_view1
    d2 = ds.config.dim_view2
    rng = np.random.default_rng(seed)
    dir1 = _unit(rng.standard_normal(d1))
    dir2 = _unit(rng.standard_normal(d2))

    def shifted(inst: MultimodalInstance) -> MultimodalInstance:
        return MultimodalInstance(
            id=inst.id,
            view1=inst.view1 + magnitude * dir1,
            view2=inst.view2 + magnitude * dir2,
            oracle_label=inst.oracle_label,
        )

    unlabeled = tuple(shifted(i) for i in ds.unlabeled) if include_unlabeled else ds.unlabeled
    return Dataset(
        labeled=ds.labeled,
        unlabeled=unlabeled,
        test=tuple(shifted(i) for i in ds.test),
        config=ds.config,
    )


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

_PARTITIONS = ("labeled", "unlabeled", "test")


def save_dataset(ds: Dataset, dataset_path: str, oracle_path: str) -> None:
    """Write dataset.csv (labels visible only on the labeled partition) + oracle.csv."""
    d1, d2 = ds.config.dim_view1, ds.config.dim_view2
    header = (
        ["id", "partition", "label"]
        + [f"v1_{j}" for j in range(d1)]
        + [f"v2_{j}" for j in range(d2)]
    )
    with open(dataset_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for part in _PARTITIONS:
            for inst in getattr(ds, part):
                label = str(inst.oracle_label) if part == "labeled" else ""
                row = [str(inst.id), part, label]
                row += [repr(float(x)) for x in inst.view1]
                row += [repr(float(x)) for x in inst.view2]
                writer.writerow(row)
    with open(oracle_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for part in _PARTITIONS:
            for inst in getattr(ds, part):
                writer.writerow([str(inst.id), str(inst.oracle_label)])


def load_dataset(
    dataset_path: str,
    oracle_path: str | None = None,
    config: GeneratorConfig | None = None,
) -> Dataset:
    """Rebuild a Dataset from dataset.csv (+ optional oracle.csv).

    Generator knobs are not stored in the CSV; pass the original config to keep
    them, otherwise a placeholder config carrying only the measured dimensions
    and partition sizes is synthesized. Without the oracle file, unlabeled and
    test instances come back with ``oracle_label=None``.
    """
    oracle: dict[int, int] = {}
    if oracle_path is not None:
        with open(oracle_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            head = next(reader)
            if head[:2] != ["id", "label"]:
                raise ValueError(f"unexpected oracle header: {head}")
            for row in reader:
                oracle[int(row[0])] = int(row[1])

    parts: dict[str, list[MultimodalInstance]] = {p: [] for p in _PARTITIONS}
    with open(dataset_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d1 = sum(1 for h in header if h.startswith("v1_"))
        d2 = sum(1 for h in header if h.startswith("v2_"))
        expected = ["id", "partition", "label"] + [f"v1_{j}" for j in range(d1)] + [f"v2_{j}" for j in range(d2)]
        if header != expected:
            raise ValueError(f"unexpected dataset header: {header}")
        for row in reader:
            inst_id, part, label = int(row[0]), row[1], row[2]
            if part not in _PARTITIONS:
                raise ValueError(f"unknown partition {part!r} for id {inst_id}")
            view1 = np.array([float(x) for x in row[3 : 3 + d1]])
            view2 = np.array([float(x) for x in row[3 + d1 :]])
            if inst_id in oracle:
                lab: int | None = oracle[inst_id]
            elif label != "":
                lab = int(label)
            else:
                lab = None
            parts[part].append(MultimodalInstance(id=inst_id, view1=view1, view2=view2, oracle_label=lab))

    if config is None:
        config = GeneratorConfig(
            dim_view1=d1,
            dim_view2=d2,
            n_labeled=len(parts["labeled"]),
            n_unlabeled=len(parts["unlabeled"]),
            n_test=max(1, len(parts["test"])),
        )
    return Dataset(
        labeled=tuple(parts["labeled"]),
        unlabeled=tuple(parts["unlabeled"]),
        test=tuple(parts["test"]),
        config=config,
    )
