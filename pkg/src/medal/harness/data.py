"""Dataset ingestion, synthetic data, train/test splitting and oversampling."""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import DatasetState, Example
from ..descriptors import BriefPattern, describe_image, read_pgm
from ..errors import EmptyDataset, InconsistentDimension, InvalidSpec, ParseError

FEATURE_CSV = "feature-csv"
PGM_DIR = "pgm-dir"


class DataWarning(UserWarning):
    pass


@dataclass
class Dataset:
    """Loaded examples.

    ``features`` is the matrix the learner consumes: the raw feature
    columns in tabular mode, or flattened intensities scaled to [0, 1] in
    image mode. ``images`` is only set in image mode.
    """

    features: np.ndarray
    labels: np.ndarray
    mode: str = "tabular"
    images: list | None = None
    names: list[str] = field(default_factory=list)
    num_classes: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) == 0:
            raise EmptyDataset("dataset has no examples")
        if len(self.features) != len(self.labels):
            raise InconsistentDimension(f"{len(self.features)} feature rows vs {len(self.labels)} labels")
        if self.labels.min() < 0:
            raise ParseError("labels must be non-negative class indices")
        self.num_classes = max(self.num_classes, int(self.labels.max()) + 1)

    def __len__(self):
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def examples(self) -> list[Example]:
        payloads = self.images if self.mode == "image" else list(self.features)
        return [Example(i, p, int(y)) for i, (p, y) in enumerate(zip(payloads, self.labels))]

    def descriptors(self, threshold: int = 20, max_keypoints: int = 500,
                    pattern_seed: int = 0) -> np.ndarray:
        """Vectors used for diversity-based initialisation.

        Image mode: pooled ORB-style descriptors (256-d). Tabular mode: the
        raw feature vectors.
        """
        if self.mode != "image":
            return self.features
        pattern = BriefPattern.generate(pattern_seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return np.array([describe_image(img, pattern, threshold, max_keypoints)
                             for img in self.images])


# -- loading ---------------------------------------------------------------

def load_dataset(path, format: str | None = None) -> Dataset:
    """Load a feature CSV or a directory of PGM images plus ``labels.csv``.

    ``format`` is inferred from the path when omitted: directories are
    read as PGM directories, files as feature CSVs.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset: {path}")
    if format is None:
        format = PGM_DIR if path.is_dir() else FEATURE_CSV
    if format == FEATURE_CSV:
        return _load_feature_csv(path)
    if format == PGM_DIR:
        return _load_pgm_dir(path)
    raise ValueError(f"unknown dataset format {format!r}")


def _parse_label(text, where):
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"{where}: label {text!r} is not an integer class") from None
    if value < 0:
        raise ParseError(f"{where}: label {value} is negative")
    return value


def _load_feature_csv(path: Path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path}: file is empty")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "label":
            raise ParseError(f"{path}, line 1: header must end with a 'label' column")
        n_feat = len(header) - 1
        rows, labels = [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n_feat + 1:
                raise InconsistentDimension(
                    f"{path}, line {lineno}: expected {n_feat + 1} columns, got {len(row)}")
            try:
                values = [float(c) for c in row[:-1]]
            except ValueError:
                raise ParseError(f"{path}, line {lineno}: non-numeric feature value") from None
            if not all(np.isfinite(values)):
                raise ParseError(f"{path}, line {lineno}: non-finite feature value")
            rows.append(values)
            labels.append(_parse_label(row[-1].strip(), f"{path}, line {lineno}"))
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), mode="tabular")


def _load_pgm_dir(path: Path) -> Dataset:
    label_file = path / "labels.csv"
    if not label_file.exists():
        raise ParseError(f"{path}: missing labels.csv")
    names, labels = [], []
    with open(label_file, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["filename", "label"]:
            raise ParseError(f"{label_file}, line 1: header must be 'filename,label'")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{label_file}, line {reader.line_num}: expected 2 columns")
            names.append(row[0].strip())
            labels.append(_parse_label(row[1].strip(), f"{label_file}, line {reader.line_num}"))
    if not names:
        raise EmptyDataset(f"{label_file}: no images listed")
    images = [read_pgm(path / n) for n in names]
    shape = images[0].pixels.shape
    for n, img in zip(names, images):
        if img.pixels.shape != shape:
            raise InconsistentDimension(
                f"{path / n}: image is {img.width}x{img.height}, expected {shape[1]}x{shape[0]}")
    features = np.stack([img.pixels.reshape(-1) for img in images]) / 255.0
    return Dataset(features, np.array(labels), mode="image", images=images, names=names)


def list_pgm_files(directory) -> list[str]:
    """Images of a directory in dataset order: ``labels.csv`` order if present,
    otherwise sorted ``*.pgm`` names."""
    directory = Path(directory)
    label_file = directory / "labels.csv"
    if label_file.exists():
        with open(label_file, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        return [r[0].strip() for r in rows if r and r[0].strip()]
    return sorted(p.name for p in directory.iterdir() if p.suffix.lower() == ".pgm")


# -- synthetic data --------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 2
    clusters_per_class: int = 10
    points_per_cluster: int = 48
    dimension: int = 16
    cluster_spread: float = 2.0
    center_box: tuple[float, float] = (-4.0, 4.0)
    seed: int = 0
    class_ratio: tuple[float, ...] = ()

    @property
    def total(self) -> int:
        return self.num_classes * self.clusters_per_class * self.points_per_cluster

    @classmethod
    def from_config(cls, cfg) -> "SyntheticSpec":
        return cls(cfg.synthetic_num_classes, cfg.synthetic_clusters_per_class,
                   cfg.synthetic_points_per_cluster, cfg.synthetic_dimension,
                   cfg.synthetic_spread, (-cfg.synthetic_center_box, cfg.synthetic_center_box),
                   cfg.synthetic_seed, tuple(cfg.synthetic_class_ratio))


def class_sizes(total: int, ratio) -> list[int]:
    """Split ``total`` by ``ratio`` with largest-remainder rounding.

    Leftover units go to the classes with the largest fractional parts,
    lower class index first on ties, so the counts always sum to ``total``.
    """
    ratio = np.asarray(ratio, dtype=np.float64)
    exact = total * ratio / ratio.sum()
    sizes = np.floor(exact).astype(int)
    order = sorted(range(len(ratio)), key=lambda c: (-(exact[c] - sizes[c]), c))
    for c in order[: total - int(sizes.sum())]:
        sizes[c] += 1
    return [int(s) for s in sizes]


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Gaussian blobs at uniformly drawn centres.

    The dataset holds ``spec.total`` points. Without a class ratio every
    cluster gets ``points_per_cluster`` points. With one, class sizes come
    from :func:`class_sizes` and each class's points are dealt over its
    clusters as evenly as possible (earlier clusters take the remainder).
    Examples are ordered class by class, cluster by cluster.
    """
    counts = (spec.num_classes, spec.clusters_per_class, spec.points_per_cluster, spec.dimension)
    if min(counts) <= 0:
        raise InvalidSpec(f"all counts must be positive: {spec}")
    if not spec.cluster_spread > 0:
        raise InvalidSpec("cluster_spread must be positive")
    lo, hi = spec.center_box
    if not lo < hi:
        raise InvalidSpec(f"bad center_box {spec.center_box}")
    if spec.class_ratio:
        if len(spec.class_ratio) != spec.num_classes or min(spec.class_ratio) <= 0:
            raise InvalidSpec("class_ratio needs one positive weight per class")
        per_class = class_sizes(spec.total, spec.class_ratio)
    else:
        per_class = [spec.clusters_per_class * spec.points_per_cluster] * spec.num_classes

    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(lo, hi, size=(spec.num_classes, spec.clusters_per_class, spec.dimension))
    feats, labels = [], []
    for c in range(spec.num_classes):
        base, extra = divmod(per_class[c], spec.clusters_per_class)
        for j in range(spec.clusters_per_class):
            n = base + (j < extra)
            feats.append(centers[c, j] + spec.cluster_spread * rng.standard_normal((n, spec.dimension)))
            labels.append(np.full(n, c))
    return Dataset(np.concatenate(feats), np.concatenate(labels), mode="tabular",
                   num_classes=spec.num_classes)


# -- partitioning ----------------------------------------------------------

def split(dataset: Dataset, ratios=(0.8, 0.2), seed: int = 0) -> DatasetState:
    """Seeded shuffle, then the first ``round(n * ratios[0])`` ids form the pool.

    The training set starts empty; it is filled from the pool by the
    initialisation strategy.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 2 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be two non-negative numbers summing to 1, got {ratios}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_pool = int(round(n * ratios[0]))
    if n_pool == n:
        warnings.warn("test split is empty; accuracy will be reported as nan", DataWarning,
                      stacklevel=2)
    return DatasetState.from_labels(dataset.labels, train_ids=(),
                                    oracle_ids=order[:n_pool], test_ids=order[n_pool:],
                                    num_classes=dataset.num_classes)


def oversample_minority(ids, labels) -> list[int]:
    """Duplicate minority-class ids round-robin until every class present
    matches the majority count. ``labels`` is row-aligned with ``ids``."""
    ids = [int(i) for i in ids]
    labels = [int(y) for y in labels]
    by_class: dict[int, list[int]] = {}
    for i, y in zip(ids, labels):
        by_class.setdefault(y, []).append(i)
    if len(by_class) <= 1:
        warnings.warn("only one class present; nothing to oversample", DataWarning, stacklevel=2)
        return ids
    target = max(len(v) for v in by_class.values())
    out = list(ids)
    for y in sorted(by_class):
        members = by_class[y]
        out += [members[j % len(members)] for j in range(target - len(members))]
    return out


def write_csv_atomic(path, header, rows):
    """Write a CSV through a temp file and ``os.replace`` it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def write_text_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
