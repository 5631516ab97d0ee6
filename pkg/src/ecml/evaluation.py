"""Zero-shot evaluation: Recall@K retrieval, k-means, NMI, pairwise F1."""

from dataclasses import dataclass

import numpy as np


@dataclass
class RetrievalReport:
    recall_at: dict  # K -> value in [0, 1]
    n_queries: int


@dataclass
class ClusteringReport:
    nmi: float
    f1: float
    n_clusters: int


def pairwise_sq_distances(embeddings) -> np.ndarray:
    x = np.asarray(embeddings, dtype=np.float64)
    sq = np.sum(x ** 2, axis=1)
    m = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
    m = np.maximum(m, 0.0)
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return m


def recall_at_k(embeddings, labels, ks) -> RetrievalReport:
    """Fraction of queries whose K nearest neighbors (self excluded, ties
    broken by lower row index) contain a same-class row.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < 2:
        raise ValueError("recall_at_k requires every class to have >= 2 samples")
    if any(k < 1 for k in ks):
        raise ValueError("ks must be >= 1")
    dist = pairwise_sq_distances(embeddings)
    n = dist.shape[0]
    np.fill_diagonal(dist, np.inf)
    # stable sort on distance keeps lower indices first among ties
    order = np.argsort(dist, axis=1, kind="stable")
    recall = {}
    for k in sorted(ks):
        neigh = order[:, :k]
        hit = (labels[neigh] == labels[:, None]).any(axis=1)
        recall[int(k)] = float(hit.mean())
    return RetrievalReport(recall, n)


def kmeans(embeddings, n_clusters, seed, max_iter=100, tol=1e-6):
    """Lloyd's algorithm with k-means++ seeding; empty clusters are reseeded
    to the point farthest from its assigned centroid. Deterministic in seed.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    n = x.shape[0]
    if n_clusters > n:
        raise ValueError(f"n_clusters {n_clusters} > number of points {n}")
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = np.empty((n_clusters, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = np.sum((x - centroids[0]) ** 2, axis=1)
    for c in range(1, n_clusters):
        total = closest.sum()
        if total <= 0:
            centroids[c] = x[rng.integers(n)]
        else:
            centroids[c] = x[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((x - centroids[c]) ** 2, axis=1))

    assign = np.zeros(n, dtype=np.intp)
    for _ in range(max_iter):
        d = (np.sum(x ** 2, axis=1)[:, None]
             + np.sum(centroids ** 2, axis=1)[None, :]
             - 2.0 * x @ centroids.T)
        assign = np.argmin(d, axis=1)
        new_centroids = centroids.copy()
        for c in range(n_clusters):
            members = assign == c
            if members.any():
                new_centroids[c] = x[members].mean(axis=0)
            else:
                worst = np.argmax(d[np.arange(n), assign])
                new_centroids[c] = x[worst]
                assign[worst] = c
        shift = np.linalg.norm(new_centroids - centroids, axis=1).max()
        centroids = new_centroids
        if shift < tol:
            break
    return assign


def nmi(assignments, labels) -> float:
    """2 I / (H_a + H_b) with natural logs; 0 when both sides are degenerate."""
    a = np.asarray(assignments)
    b = np.asarray(labels)
    if a.shape != b.shape:
        raise ValueError("assignments and labels length mismatch")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(contingency, (ai, bi), 1.0)
    p = contingency / n
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)

    def entropy(q):
        q = q[q > 0]
        return float(-(q * np.log(q)).sum())

    mask = p > 0
    mi = float((p[mask] * np.log(p[mask] / np.outer(pa, pb)[mask])).sum())
    denom = entropy(pa) + entropy(pb)
    if denom == 0.0:
        return 0.0
    return 2.0 * mi / denom


def pairwise_f1(assignments, labels) -> float:
    """F1 over co-clustering decisions on all unordered sample pairs."""
    a = np.asarray(assignments)
    b = np.asarray(labels)
    if a.shape != b.shape:
        raise ValueError("assignments and labels length mismatch")
    if len(a) < 2:
        raise ValueError("need at least 2 samples")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(contingency, (ai, bi), 1.0)

    def pairs(counts):
        return float((counts * (counts - 1) / 2).sum())

    tp = pairs(contingency)
    same_cluster = pairs(contingency.sum(axis=1))
    same_class = pairs(contingency.sum(axis=0))
    if tp == 0:
        return 0.0
    precision = tp / same_cluster
    recall = tp / same_class
    return 2.0 * precision * recall / (precision + recall)


def clustering_report(embeddings, labels, seed) -> ClusteringReport:
    """Cluster with k = number of ground-truth classes and score."""
    labels = np.asarray(labels)
    k = len(np.unique(labels))
    assign = kmeans(embeddings, k, seed)
    return ClusteringReport(nmi(assign, labels), pairwise_f1(assign, labels), k)
