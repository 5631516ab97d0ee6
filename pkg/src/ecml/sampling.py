"""Dataset container, the classes-per-batch x instances-per-class sampler,
and tuple builders for the three losses.
"""

from dataclasses import dataclass, field

import numpy as np

from .confusion import ClassGroup
from .errors import ConfigError, SamplingError
from .losses import NPairTuples


@dataclass
class Dataset:
    features: np.ndarray        # (M, input_dim)
    labels: np.ndarray          # (M,) int class ids
    split: dict                 # class id -> "seen" | "unseen"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels length mismatch")
        classes, counts = np.unique(self.labels, return_counts=True)
        for c in classes:
            if int(c) not in self.split:
                raise ValueError(f"class {c} missing from split mapping")
            if self.split[int(c)] not in ("seen", "unseen"):
                raise ValueError(f"bad split token {self.split[int(c)]!r} for class {c}")
        if not self.seen_classes or not self.unseen_classes:
            raise ValueError("both seen and unseen splits must be non-empty")
        small = classes[counts < 2]
        if small.size:
            raise ValueError(f"classes with fewer than 2 samples: {small.tolist()}")

    @property
    def input_dim(self):
        return self.features.shape[1]

    @property
    def seen_classes(self):
        return sorted(c for c, s in self.split.items() if s == "seen")

    @property
    def unseen_classes(self):
        return sorted(c for c, s in self.split.items() if s == "unseen")

    def split_rows(self, which):
        """Row indices whose class is in the given split ('seen', 'unseen'
        or 'all')."""
        if which == "all":
            return np.arange(len(self.labels))
        wanted = {c for c, s in self.split.items() if s == which}
        return np.flatnonzero(np.isin(self.labels, sorted(wanted)))


@dataclass
class BatchSpec:
    classes_per_batch: int = 64
    instances_per_class: int = 2

    def __post_init__(self):
        if self.classes_per_batch < 2:
            raise ConfigError("classes_per_batch must be >= 2")
        if self.instances_per_class < 1:
            raise ConfigError("instances_per_class must be >= 1")


@dataclass
class Batch:
    features: np.ndarray
    labels: np.ndarray
    groups: list  # ClassGroup per class, in sampling order


def sample_batch(dataset: Dataset, spec: BatchSpec, split_filter: str, rng) -> Batch:
    """P classes uniformly without replacement, K instances each."""
    rows = dataset.split_rows(split_filter)
    labels = dataset.labels[rows]
    classes, counts = np.unique(labels, return_counts=True)
    eligible = classes[counts >= spec.instances_per_class]
    if len(eligible) < spec.classes_per_batch:
        raise SamplingError(
            f"need {spec.classes_per_batch} classes with >= "
            f"{spec.instances_per_class} samples in split {split_filter!r}, "
            f"only {len(eligible)} available")
    chosen = rng.choice(eligible, size=spec.classes_per_batch, replace=False)

    feat_rows, batch_labels, groups = [], [], []
    cursor = 0
    for c in chosen:
        candidates = rows[labels == c]
        picked = rng.choice(candidates, size=spec.instances_per_class, replace=False)
        feat_rows.extend(picked)
        batch_labels.extend([int(c)] * spec.instances_per_class)
        groups.append(ClassGroup(int(c), list(range(cursor, cursor + spec.instances_per_class))))
        cursor += spec.instances_per_class
    return Batch(dataset.features[feat_rows].copy(),
                 np.asarray(batch_labels, dtype=np.intp),
                 groups)


def build_triplets(batch: Batch, rng):
    """One uniform random negative for every ordered within-class pair."""
    if len(batch.groups) < 2:
        return []
    triplets = []
    all_rows = np.arange(len(batch.labels))
    for g in batch.groups:
        others = all_rows[batch.labels != g.label]
        for a in g.rows:
            for p in g.rows:
                if a == p:
                    continue
                n = int(rng.choice(others))
                triplets.append((a, p, n))
    return triplets


def build_npair_tuples(batch: Batch) -> NPairTuples:
    """First instance of each class anchors, second is the positive; the
    negatives of an anchor are the positives of every other class.
    """
    if any(len(g.rows) != 2 for g in batch.groups):
        raise ValueError("npair layout requires exactly 2 instances per class")
    anchors = [g.rows[0] for g in batch.groups]
    positives = [g.rows[1] for g in batch.groups]
    negatives = [[positives[j] for j in range(len(batch.groups)) if j != i]
                 for i in range(len(batch.groups))]
    return NPairTuples(anchors, positives, negatives)


def build_contrastive_pairs(batch: Batch):
    """All unordered row pairs with the same-class indicator."""
    n = len(batch.labels)
    i, j = np.triu_indices(n, k=1)
    s = (batch.labels[i] == batch.labels[j]).astype(np.intp)
    return np.column_stack([i, j, s])
