"""Energy confusion: the mean squared distance between two class groups,
its logarithmic form, class-pair selection, and assembly of the combined
regularized objective.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .losses import LossOutput


@dataclass
class ClassGroup:
    label: int
    rows: list

    def __post_init__(self):
        if len(self.rows) == 0:
            raise ValueError("ClassGroup requires at least one row")
        if len(set(self.rows)) != len(self.rows):
            raise ValueError("duplicate rows in ClassGroup")


@dataclass
class EcConfig:
    lam: float = 0.1
    pair_mode: str = "sample_k"  # or "all_unordered"
    k: int = 8
    log_form: bool = True
    stop_gradient: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.pair_mode not in ("all_unordered", "sample_k"):
            raise ConfigError(f"unknown pair_mode {self.pair_mode!r}")
        if self.pair_mode == "sample_k" and self.k < 1:
            raise ConfigError("sample_k requires k >= 1")


def energy_confusion(embeddings, group_i: ClassGroup, group_j: ClassGroup) -> LossOutput:
    """Mean squared Euclidean distance over all cross pairs of the two
    groups (uniform joint probability), with its gradient.
    """
    if group_i.label == group_j.label:
        raise ValueError("energy_confusion requires groups of different labels")
    x = np.asarray(embeddings, dtype=np.float64)
    xi = x[group_i.rows]
    xj = x[group_j.rows]
    n_i, n_j = len(xi), len(xj)

    sq_i = np.sum(xi ** 2, axis=1)
    sq_j = np.sum(xj ** 2, axis=1)
    cross = xi @ xj.T
    value = float((sq_i[:, None] + sq_j[None, :] - 2.0 * cross).sum()) / (n_i * n_j)

    grad = np.zeros_like(x)
    mean_i = xi.mean(axis=0)
    mean_j = xj.mean(axis=0)
    np.add.at(grad, group_i.rows, (2.0 / n_i) * (xi - mean_j))
    np.add.at(grad, group_j.rows, (2.0 / n_j) * (xj - mean_i))
    return LossOutput(max(value, 0.0), grad)


def log_energy_confusion(embeddings, group_i, group_j) -> LossOutput:
    """log(1 + EC), the numerically tamer form used during training."""
    ec = energy_confusion(embeddings, group_i, group_j)
    return LossOutput(float(np.log1p(ec.value)), ec.grad / (1.0 + ec.value))


def select_class_pairs(groups, cfg: EcConfig, rng):
    """Unordered distinct-label group pairs: all of them, or k sampled
    uniformly without replacement. Deterministic in the rng state.
    """
    if len(groups) < 2:
        warnings.warn("select_class_pairs called with fewer than 2 groups")
        return []
    pairs = [(groups[a], groups[b])
             for a in range(len(groups))
             for b in range(a + 1, len(groups))
             if groups[a].label != groups[b].label]
    if cfg.pair_mode == "all_unordered":
        return pairs
    k = min(cfg.k, len(pairs))
    idx = rng.choice(len(pairs), size=k, replace=False)
    return [pairs[i] for i in idx]


def confusion_penalty(embeddings, groups, cfg: EcConfig, rng) -> LossOutput:
    """Mean (log-)energy-confusion over the selected class pairs, unscaled
    by lambda.
    """
    pairs = select_class_pairs(groups, cfg, rng)
    x = np.asarray(embeddings, dtype=np.float64)
    if not pairs:
        return LossOutput(0.0, np.zeros_like(x))
    term = log_energy_confusion if cfg.log_form else energy_confusion
    value = 0.0
    grad = np.zeros_like(x)
    for gi, gj in pairs:
        out = term(x, gi, gj)
        value += out.value
        grad += out.grad
    n = len(pairs)
    return LossOutput(value / n, grad / n)


def ecaml_objective(base: LossOutput, embeddings, groups, cfg: EcConfig, rng) -> LossOutput:
    """Baseline loss plus lambda times the mean confusion penalty.

    With lambda = 0 the baseline output is returned untouched (bit-identical
    value and gradient).
    """
    if cfg.lam == 0.0:
        return LossOutput(base.value, base.grad.copy(), 0.0)
    pen = confusion_penalty(embeddings, groups, cfg, rng)
    return LossOutput(base.value + cfg.lam * pen.value,
                      base.grad + cfg.lam * pen.grad,
                      pen.value)
