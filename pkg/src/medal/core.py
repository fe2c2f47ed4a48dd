"""Examples, dataset partitions, run configuration and per-iteration records."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DuplicateId, LabelLeakError, NotInOracle
from .learner import AdamConfig

METRICS = ("euclidean", "cosine", "cityblock", "chebyshev", "russellrao", "kulsinski")
SAMPLERS = ("medal", "uncertainty", "random")
INIT_STRATEGIES = ("farthest_first", "random")


def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 32-bit child seed for ``(master_seed, *keys)``.

    Uses numpy's SeedSequence hashing so the value does not depend on the
    interpreter's ``hash`` randomisation.
    """
    entropy = [int(master_seed) & 0xFFFFFFFF, *(int(k) & 0xFFFFFFFF for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


@dataclass(frozen=True)
class Image:
    """Grayscale image, row-major, intensities 0..255."""

    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"expected a 2-D pixel array, got shape {px.shape}")
        object.__setattr__(self, "pixels", px.astype(np.uint8, copy=False))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Example:
    id: int
    payload: Any  # np.ndarray feature vector or Image
    hidden_label: int = field(repr=False)


@dataclass(frozen=True)
class DatasetState:
    """Immutable partition of example ids into train / oracle / test.

    ``train_ids`` keeps acquisition order; the other two are kept in the
    order they were given. Labels are stored here but only handed out for
    train and test ids: the simulated oracle reveals a label by moving the
    id into ``train_ids`` via :func:`transfer`.
    """

    train_ids: tuple[int, ...]
    oracle_ids: tuple[int, ...]
    test_ids: tuple[int, ...]
    num_classes: int
    _labels: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        for name in ("train_ids", "oracle_ids", "test_ids"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))
        labels = np.asarray(self._labels, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "_labels", labels)
        sets = [set(self.train_ids), set(self.oracle_ids), set(self.test_ids)]
        if sum(map(len, sets)) != len(self.train_ids) + len(self.oracle_ids) + len(self.test_ids):
            raise DuplicateId("an id appears twice within one partition set")
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise DuplicateId("partition sets overlap")
        if set().union(*sets) != set(range(len(labels))):
            raise ValueError("partition does not cover the id universe")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")

    @classmethod
    def from_labels(cls, labels, train_ids=(), oracle_ids=(), test_ids=(), num_classes=None):
        labels = np.asarray(labels, dtype=np.int64)
        if num_classes is None:
            num_classes = int(labels.max()) + 1 if labels.size else 1
        return cls(tuple(train_ids), tuple(oracle_ids), tuple(test_ids), num_classes, labels)

    @property
    def size(self) -> int:
        return len(self._labels)

    def label(self, example_id: int) -> int:
        return int(self.labels([example_id])[0])

    def labels(self, ids: Iterable[int]) -> np.ndarray:
        ids = np.asarray(list(ids), dtype=np.int64)
        if ids.size:
            oracle = np.isin(ids, np.asarray(self.oracle_ids, dtype=np.int64))
            if oracle.any():
                raise LabelLeakError(
                    f"label of oracle example {int(ids[oracle][0])} read before it was queried")
        return self._labels[ids]

    def class_counts(self, ids: Iterable[int]) -> np.ndarray:
        return np.bincount(self.labels(ids), minlength=self.num_classes)

    def with_train(self, ids: Sequence[int]) -> "DatasetState":
        """Move ``ids`` from oracle to train (same checks as :func:`transfer`)."""
        return transfer(self, ids)


def transfer(state: DatasetState, ids: Sequence[int]) -> DatasetState:
    """Move ``ids`` out of the oracle pool and into the training set."""
    ids = [int(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise DuplicateId(f"duplicate ids in transfer request: {ids}")
    if not ids:
        return state
    oracle = set(state.oracle_ids)
    missing = [i for i in ids if i not in oracle]
    if missing:
        raise NotInOracle(f"ids not in the oracle pool: {missing}")
    moved = set(ids)
    return dataclasses.replace(
        state,
        train_ids=state.train_ids + tuple(ids),
        oracle_ids=tuple(i for i in state.oracle_ids if i not in moved),
    )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    labeled_count: int
    test_accuracy: float
    sampler_id: str
    wall_time_ms: int = 0


@dataclass(frozen=True)
class RunConfig:
    """All knobs of one experiment.

    Defaults: initial set of 100, 20 acquisitions per iteration and an
    entropy filter of 50, with a small two-hidden-layer learner.
    """

    initial_train_size: int = 100
    imgs_per_iteration: int = 20
    entropy_filter_size: int = 50
    metric_id: str = "euclidean"
    feature_layer: int = 1
    hidden_layers: tuple[int, ...] = (64, 32)
    max_epochs: int = 500
    adam: AdamConfig = field(default_factory=AdamConfig)
    master_seed: int = 0
    oversample_minority: bool = False
    init_strategy: str = "farthest_first"
    greedy_refilter: bool = False
    max_iterations: int | None = None
    test_fraction: float = 0.2
    eval_sample_size: int = 20
    orb_threshold: int = 20
    orb_max_keypoints: int = 500
    synthetic_num_classes: int = 2
    synthetic_clusters_per_class: int = 10
    synthetic_points_per_cluster: int = 48
    synthetic_dimension: int = 16
    synthetic_spread: float = 2.0
    synthetic_center_box: float = 4.0
    synthetic_class_ratio: tuple[float, ...] = ()
    synthetic_seed: int = 0

    def __post_init__(self):
        positive = ("initial_train_size", "imgs_per_iteration", "entropy_filter_size",
                    "max_epochs", "eval_sample_size", "orb_threshold", "orb_max_keypoints",
                    "synthetic_num_classes", "synthetic_clusters_per_class",
                    "synthetic_points_per_cluster", "synthetic_dimension")
        for name in positive:
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.metric_id not in METRICS:
            raise ConfigError(f"unknown metric_id {self.metric_id!r}; expected one of {METRICS}")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigError(f"unknown init_strategy {self.init_strategy!r}")
        if not self.hidden_layers or any(int(h) <= 0 for h in self.hidden_layers):
            raise ConfigError("hidden_layers must list at least one positive width")
        if not 0 <= self.feature_layer < len(self.hidden_layers):
            raise ConfigError(
                f"feature_layer {self.feature_layer} outside 0..{len(self.hidden_layers) - 1}")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in [0, 1)")
        if self.synthetic_spread <= 0:
            raise ConfigError("synthetic_spread must be positive")
        try:
            self.adam.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)
