"""Baseline metric-learning objectives with analytic embedding gradients.

All three return the summed (not averaged) objective over their tuples,
plus d(loss)/d(embedding) for every batch row.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError


@dataclass
class TripletConfig:
    margin: float = 0.1

    def __post_init__(self):
        if self.margin < 0:
            raise ConfigError(f"triplet margin must be >= 0, got {self.margin}")


@dataclass
class NPairConfig:
    pass


@dataclass
class BinomialConfig:
    alpha: float = 2.0
    beta: float = 0.5
    eta_pos: float = 1.0
    eta_neg: float = 25.0

    def __post_init__(self):
        if self.alpha <= 0 or self.eta_pos <= 0 or self.eta_neg <= 0:
            raise ConfigError("alpha, eta_pos and eta_neg must be positive")


@dataclass
class LossOutput:
    value: float
    grad: np.ndarray
    # confusion penalty folded into `value` (0 for bare baseline losses)
    ec_value: float = 0.0


def softplus(z):
    """log(1 + e^z), stable for large |z|."""
    return np.logaddexp(0.0, z)


def triplet_loss(embeddings, triplets, cfg: TripletConfig = None) -> LossOutput:
    """Hinge on squared distances, sum over (anchor, positive, negative)
    index triplets. Rows must be unit-norm. Subgradient 0 at the hinge
    boundary.
    """
    cfg = cfg or TripletConfig()
    x = np.asarray(embeddings, dtype=np.float64)
    grad = np.zeros_like(x)
    if len(triplets) == 0:
        return LossOutput(0.0, grad)

    t = np.asarray(triplets, dtype=np.intp)
    used = np.unique(t)
    norms = np.linalg.norm(x[used], axis=1)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ValueError("triplet_loss requires unit-norm embeddings")

    a, p, n = t[:, 0], t[:, 1], t[:, 2]
    d_ap = np.sum((x[a] - x[p]) ** 2, axis=1)
    d_an = np.sum((x[a] - x[n]) ** 2, axis=1)
    slack = d_ap - d_an + cfg.margin
    active = slack > 0
    value = float(slack[active].sum())

    aa, pp, nn = a[active], p[active], n[active]
    np.add.at(grad, aa, 2.0 * (x[nn] - x[pp]))
    np.add.at(grad, pp, 2.0 * (x[pp] - x[aa]))
    np.add.at(grad, nn, 2.0 * (x[aa] - x[nn]))
    return LossOutput(value, grad)


@dataclass
class NPairTuples:
    anchors: list
    positives: list
    negatives: list  # one index list per anchor


def npair_loss(embeddings, tuples: NPairTuples, cfg: NPairConfig = None) -> LossOutput:
    """Sum_i log(1 + sum_j exp(x_i.x_j - x_i.x_pos)) over negatives j,
    computed in log-sum-exp form. Anchors without negatives are skipped.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("non-finite embeddings")
    grad = np.zeros_like(x)
    value = 0.0
    skipped = 0
    for a, pos, negs in zip(tuples.anchors, tuples.positives, tuples.negatives):
        if len(negs) == 0:
            skipped += 1
            continue
        negs = np.asarray(negs, dtype=np.intp)
        logits = x[negs] @ x[a] - x[pos] @ x[a]
        # log(1 + sum e^logits) = logsumexp([0, logits...])
        m = max(0.0, logits.max())
        lse = m + np.log(np.exp(-m) + np.exp(logits - m).sum())
        value += lse
        w = np.exp(logits - lse)  # softmax weight of each negative
        grad[a] += w @ (x[negs] - x[pos])
        np.add.at(grad, negs, w[:, None] * x[a])
        grad[pos] -= w.sum() * x[a]
    if skipped:
        warnings.warn(f"npair_loss skipped {skipped} anchor(s) without negatives")
    return LossOutput(float(value), grad)


def binomial_loss(embeddings, pairs, cfg: BinomialConfig = None) -> LossOutput:
    """Binomial deviance over labelled pairs (i, j, same_class) with cosine
    similarity, stable softplus form.
    """
    cfg = cfg or BinomialConfig()
    x = np.asarray(embeddings, dtype=np.float64)
    grad = np.zeros_like(x)
    if len(pairs) == 0:
        return LossOutput(0.0, grad)

    arr = np.asarray(pairs)
    i, j = arr[:, 0].astype(np.intp), arr[:, 1].astype(np.intp)
    s = arr[:, 2].astype(np.float64)

    norms = np.linalg.norm(x, axis=1)
    if np.min(norms[np.unique(np.concatenate([i, j]))]) == 0.0:
        raise ValueError("binomial_loss referenced a zero-norm embedding row")

    ni, nj = norms[i], norms[j]
    dots = np.sum(x[i] * x[j], axis=1)
    cos = dots / (ni * nj)
    eta = np.where(s == 1.0, cfg.eta_pos, cfg.eta_neg)
    sign = 2.0 * s - 1.0
    z = -sign * cfg.alpha * (cos - cfg.beta) * eta
    value = float(softplus(z).sum())

    dz = expit(z)                      # d softplus / dz
    dcos = dz * (-sign * cfg.alpha * eta)  # d loss / d cos
    # cosine quotient rule
    gi = (x[j] / (ni * nj)[:, None]) - (cos / ni ** 2)[:, None] * x[i]
    gj = (x[i] / (ni * nj)[:, None]) - (cos / nj ** 2)[:, None] * x[j]
    np.add.at(grad, i, dcos[:, None] * gi)
    np.add.at(grad, j, dcos[:, None] * gj)
    return LossOutput(value, grad)
