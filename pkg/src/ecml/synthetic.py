"""Synthetic zero-shot benchmark with a seen-class shortcut channel.

Every class gets a unit prototype in the "general" feature subspace; seen
classes additionally get a high-gain random direction in the "shortcut"
dims, so seen classes are trivially separable from the shortcut alone while
unseen classes carry pure noise there. A model that latches onto the
shortcut overfits the seen split and transfers poorly.
"""

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sampling import Dataset


@dataclass
class SynthConfig:
    seen_classes: int = 8
    unseen_classes: int = 8
    samples_per_class: int = 16
    d_general: int = 16
    d_shortcut: int = 4
    noise_sigma: float = 0.3
    shortcut_gain: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if self.seen_classes < 2 or self.unseen_classes < 2:
            raise ConfigError("need at least 2 seen and 2 unseen classes")
        if self.samples_per_class < 4:
            raise ConfigError("samples_per_class must be >= 4")
        if self.d_general < 2 or self.d_shortcut < 1:
            raise ConfigError("d_general >= 2 and d_shortcut >= 1 required")
        if self.noise_sigma <= 0 or self.shortcut_gain <= 0:
            raise ConfigError("noise_sigma and shortcut_gain must be positive")

    @property
    def input_dim(self):
        return self.d_general + self.d_shortcut


def generate(cfg: SynthConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    n_classes = cfg.seen_classes + cfg.unseen_classes
    n = cfg.samples_per_class

    protos = rng.normal(size=(n_classes, cfg.d_general))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    codes = rng.normal(size=(cfg.seen_classes, cfg.d_shortcut))
    codes = cfg.shortcut_gain * codes / np.linalg.norm(codes, axis=1, keepdims=True)

    features = np.zeros((n_classes * n, cfg.input_dim))
    labels = np.zeros(n_classes * n, dtype=np.intp)
    for c in range(n_classes):
        rows = slice(c * n, (c + 1) * n)
        gen = protos[c] + cfg.noise_sigma * rng.normal(size=(n, cfg.d_general))
        sc = cfg.noise_sigma * rng.normal(size=(n, cfg.d_shortcut))
        if c < cfg.seen_classes:
            sc = sc + codes[c]
        features[rows, :cfg.d_general] = gen
        features[rows, cfg.d_general:] = sc
        labels[rows] = c

    split = {c: ("seen" if c < cfg.seen_classes else "unseen")
             for c in range(n_classes)}
    return Dataset(features, labels, split)


def save_csv(dataset: Dataset, path):
    """Write `label,split,f0,...` rows with full float64 precision."""
    d = dataset.features.shape[1]
    header = "label,split," + ",".join(f"f{k}" for k in range(d))
    lines = [header]
    for label, row in zip(dataset.labels, dataset.features):
        vals = ",".join(format(v, ".17g") for v in row)
        lines.append(f"{int(label)},{dataset.split[int(label)]},{vals}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> Dataset:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:2] != ["label", "split"] or len(header) < 3:
        raise ValueError(f"{path}:1: bad header {lines[0]!r}")
    width = len(header)

    features, labels = [], []
    split = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(parts)}")
        try:
            label = int(parts[0])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
        tok = parts[1]
        if tok not in ("seen", "unseen"):
            raise ValueError(f"{path}:{lineno}: unknown split token {tok!r}")
        if label in split and split[label] != tok:
            raise ValueError(
                f"{path}:{lineno}: class {label} appears in both splits")
        split[label] = tok
        try:
            features.append([float(v) for v in parts[2:]])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric feature value") from None
        labels.append(label)
    return Dataset(np.asarray(features), np.asarray(labels), split)
