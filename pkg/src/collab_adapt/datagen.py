"""Paired source/target Gaussian-cluster datasets with a controllable shift."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, InvalidInput, ShapeMismatch


@dataclass(frozen=True)
class DomainSpec:
    class_means: np.ndarray  # (K, d)
    covariance_scale: float = 1.0
    samples_per_class: int = 250

    def __post_init__(self):
        means = np.asarray(self.class_means, dtype=np.float64)
        object.__setattr__(self, "class_means", means)
        if means.ndim != 2:
            raise InvalidConfig("class_means must be a (K, d) matrix")
        k, d = means.shape
        if k < 2 or d < 2:
            raise InvalidConfig(f"need K >= 2 and d >= 2, got K={k}, d={d}")
        if self.samples_per_class < 1:
            raise InvalidConfig("samples_per_class must be >= 1")
        if not self.covariance_scale > 0:
            raise InvalidConfig("covariance_scale must be positive")
        if not np.all(np.isfinite(means)):
            raise InvalidConfig("class_means must be finite")
        for i in range(k):
            for j in range(i + 1, k):
                if np.array_equal(means[i], means[j]):
                    raise InvalidConfig(f"class means {i} and {j} coincide")

    @property
    def num_classes(self) -> int:
        return self.class_means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.class_means.shape[1]


@dataclass(frozen=True)
class ShiftSpec:
    rotation_angle: float = 0.0
    translation: np.ndarray | None = None
    noise_scale_multiplier: float = 1.0

    def __post_init__(self):
        if not self.noise_scale_multiplier > 0:
            raise InvalidConfig("noise_scale_multiplier must be positive")
        if self.translation is not None:
            object.__setattr__(
                self, "translation", np.asarray(self.translation, dtype=np.float64)
            )


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,)
    num_classes: int = field(default=0)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeMismatch("features must be an (n, d) matrix")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ShapeMismatch(
                f"{self.features.shape[0]} feature rows vs {self.labels.shape[0]} labels"
            )
        if self.num_classes == 0 and self.labels.size:
            self.num_classes = int(self.labels.max()) + 1
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise InvalidInput("label out of range")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def circle_means(num_classes: int, feature_dim: int, radius: float) -> np.ndarray:
    """Class means evenly spaced on a circle in the first two dims."""
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    means = np.zeros((num_classes, feature_dim))
    means[:, 0] = radius * np.cos(angles)
    means[:, 1] = radius * np.sin(angles)
    return means


def default_domain_spec() -> DomainSpec:
    return DomainSpec(circle_means(4, 2, 3.0), covariance_scale=1.0, samples_per_class=250)


def default_shift() -> ShiftSpec:
    return ShiftSpec(math.pi / 5, np.array([1.0, 0.5]), 1.5)


def _translation(shift: ShiftSpec, d: int) -> np.ndarray:
    if shift.translation is None:
        return np.zeros(d)
    t = shift.translation
    if t.shape != (d,):
        raise InvalidConfig(f"translation must have length {d}, got {t.shape}")
    return t


def shifted_means(spec: DomainSpec, shift: ShiftSpec) -> np.ndarray:
    """Rotate the first two coordinates of each mean, then translate."""
    c, s = math.cos(shift.rotation_angle), math.sin(shift.rotation_angle)
    means = spec.class_means.copy()
    x, y = means[:, 0].copy(), means[:, 1].copy()
    means[:, 0] = c * x - s * y
    means[:, 1] = s * x + c * y
    return means + _translation(shift, spec.feature_dim)


def _sample(means: np.ndarray, cov_scale: float, n_per: int, rng) -> LabeledDataset:
    k, d = means.shape
    labels = np.repeat(np.arange(k), n_per)
    noise = rng.standard_normal((k * n_per, d)) * math.sqrt(cov_scale)
    return LabeledDataset(means[labels] + noise, labels, num_classes=k)


def make_domain_pair(
    spec: DomainSpec, shift: ShiftSpec, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Draw a labeled source set and a shifted target set.

    Target covariance is ``covariance_scale * noise_scale_multiplier`` times
    the identity. Rows are grouped by class; callers shuffle as needed.
    """
    _translation(shift, spec.feature_dim)
    src_seq, tgt_seq = np.random.SeedSequence(seed).spawn(2)
    source = _sample(
        spec.class_means, spec.covariance_scale, spec.samples_per_class,
        np.random.default_rng(src_seq),
    )
    target = _sample(
        shifted_means(spec, shift),
        spec.covariance_scale * shift.noise_scale_multiplier,
        spec.samples_per_class,
        np.random.default_rng(tgt_seq),
    )
    return source, target


def write_csv(data: LabeledDataset, path) -> None:
    d = data.feature_dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(d)] + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_csv(path, num_classes: int | None = None) -> LabeledDataset:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "label":
            raise InvalidInput(f"{path}: expected header f0,...,label")
        rows = [r for r in reader if r]
    if not rows:
        raise InvalidInput(f"{path}: no samples")
    feats = np.array([[float(v) for v in r[:-1]] for r in rows])
    labels = np.array([int(r[-1]) for r in rows])
    return LabeledDataset(feats, labels, num_classes=num_classes or 0)
