"""Property verification suite: divergence inequalities, negative-type and
PSD checks, and finite-difference gradient checks for every loss term.

Each check returns a dict with the instance count, number of violations,
and the worst observed margin; `run_verification` bundles them into one
report.
"""

import numpy as np

from .confusion import ClassGroup, confusion_penalty, EcConfig, energy_confusion, log_energy_confusion
from .divergences import (Semimetric, check_upper_bounds_ged,
                          check_upper_bounds_mmd,
                          distance_induced_kernel_gram, negative_type_witness)
from .losses import (BinomialConfig, NPairTuples, TripletConfig,
                     binomial_loss, npair_loss, triplet_loss)


def fd_max_rel_error(f, x, eps=1e-5):
    """Worst relative error of analytic vs central-difference gradients.

    `f(x)` returns (scalar value, gradient array of x's shape).
    """
    x = np.array(x, dtype=np.float64)
    _, analytic = f(x)
    worst = 0.0
    flat = x.ravel()
    a_flat = np.asarray(analytic).ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus, _ = f(x)
        flat[i] = orig - eps
        f_minus, _ = f(x)
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        denom = max(abs(a_flat[i]), abs(numeric), 1e-8)
        worst = max(worst, abs(a_flat[i] - numeric) / denom)
    return worst


def _random_set_pair(rng):
    d = int(rng.integers(2, 17))
    nx = int(rng.integers(1, 11))
    ny = int(rng.integers(1, 11))
    return rng.normal(size=(nx, d)), rng.normal(size=(ny, d))


def check_ged_bound(fuzz, seed):
    """EC >= GED/2 on random set pairs (squared Euclidean semimetric)."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, np.inf
    for _ in range(fuzz):
        x, y = _random_set_pair(rng)
        ec, half, holds = check_upper_bounds_ged(x, y)
        worst = min(worst, ec - half)
        violations += 0 if holds else 1
    return {"name": "ec_ge_half_ged", "instances": fuzz,
            "violations": violations, "worst_margin": float(worst)}


def check_mmd_bound(fuzz, seed):
    """EC >= MMD^2 (linear kernel) plus the exact MMD^2 = GED/2 identity."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, np.inf
    for _ in range(fuzz):
        x, y = _random_set_pair(rng)
        ec, mmd, holds = check_upper_bounds_mmd(x, y)
        worst = min(worst, ec - mmd)
        violations += 0 if holds else 1
    return {"name": "ec_ge_mmd_sq", "instances": fuzz,
            "violations": violations, "worst_margin": float(worst)}


def check_negative_type(fuzz, seed):
    """Zero-sum quadratic forms of squared Euclidean distances are <= 0 and
    equal -2 * ||sum alpha_i z_i||^2; distance-induced Grams are PSD.
    """
    rng = np.random.default_rng(seed)
    rho_sq = Semimetric("squared_euclidean")
    rho_eu = Semimetric("euclidean")
    violations, worst = 0, -np.inf
    for _ in range(fuzz):
        d = int(rng.integers(2, 9))
        n = int(rng.integers(2, 9))
        pts = rng.normal(size=(n, d))
        a = rng.normal(size=n)
        a -= a.mean()
        w = negative_type_witness(pts, a, rho_sq)
        ident = -2.0 * float(np.sum((a @ pts) ** 2))
        ok = w <= 1e-9 and abs(w - ident) <= 1e-9 * max(1.0, abs(ident))
        gram = distance_induced_kernel_gram(pts, rho_eu, np.zeros(d))
        min_eig = float(np.linalg.eigvalsh(gram).min())
        scale = max(1.0, float(np.abs(gram).max()))
        ok = ok and min_eig >= -1e-9 * scale
        worst = max(worst, w, -ident + w, -min_eig)
        violations += 0 if ok else 1
    return {"name": "negative_type", "instances": fuzz,
            "violations": violations, "worst_margin": float(worst)}


def _normalize_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _through_normalization(x, grad_normed):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    y = x / norms
    radial = np.sum(grad_normed * y, axis=1, keepdims=True)
    return (grad_normed - radial * y) / norms


def _random_groups(rng, n, n_classes):
    labels = np.repeat(np.arange(n_classes), n // n_classes)
    return [ClassGroup(int(c), np.flatnonzero(labels == c).tolist())
            for c in range(n_classes)], labels


def _grad_check_fn(name, rng):
    """Build one random instance of the named objective as f(x)->(v, g)."""
    n, d = 16, 5
    groups, labels = _random_groups(rng, n, 8)
    x = rng.normal(size=(n, d))
    ec_cfg = EcConfig(lam=0.5, pair_mode="all_unordered", log_form=True)
    pair_rng = np.random.default_rng(rng.integers(2 ** 32))

    if name == "triplet":
        cfg = TripletConfig(0.1)
        while True:
            triplets = [(g.rows[0], g.rows[1], groups[(i + 1) % 8].rows[0])
                        for i, g in enumerate(groups)]
            emb = _normalize_rows(x)
            t = np.asarray(triplets)
            slack = (np.sum((emb[t[:, 0]] - emb[t[:, 1]]) ** 2, 1)
                     - np.sum((emb[t[:, 0]] - emb[t[:, 2]]) ** 2, 1) + cfg.margin)
            if np.abs(slack).min() > 1e-3:  # stay clear of the hinge
                break
            x = rng.normal(size=(n, d))

        def f(raw):
            emb = _normalize_rows(raw)
            out = triplet_loss(emb, triplets, cfg)
            return out.value, _through_normalization(raw, out.grad)
        return f, x

    if name == "npair":
        tuples = NPairTuples([g.rows[0] for g in groups],
                             [g.rows[1] for g in groups],
                             [[groups[j].rows[1] for j in range(8) if j != i]
                              for i in range(8)])
        def f(raw):
            out = npair_loss(raw, tuples)
            return out.value, out.grad
        return f, x

    if name == "binomial":
        i, j = np.triu_indices(n, k=1)
        pairs = np.column_stack([i, j, (labels[i] == labels[j]).astype(int)])
        def f(raw):
            out = binomial_loss(raw, pairs, BinomialConfig())
            return out.value, out.grad
        return f, x

    if name in ("ec", "log_ec"):
        term = energy_confusion if name == "ec" else log_energy_confusion
        def f(raw):
            out = term(raw, groups[0], groups[1])
            return out.value, out.grad
        return f, x

    # full combined objectives: base + lambda * mean confusion
    base_name = name.split("+")[1]
    base_f, x = _grad_check_fn(base_name, rng)
    pair_state = pair_rng.bit_generator.state

    def f(raw):
        v, g = base_f(raw)
        pair_rng.bit_generator.state = pair_state
        emb = _normalize_rows(raw) if base_name == "triplet" else raw
        pen = confusion_penalty(emb, groups, ec_cfg, pair_rng)
        pen_grad = (_through_normalization(raw, pen.grad)
                    if base_name == "triplet" else pen.grad)
        return v + ec_cfg.lam * pen.value, g + ec_cfg.lam * pen_grad
    return f, x


GRAD_CHECK_NAMES = ("triplet", "npair", "binomial", "ec", "log_ec",
                    "full+triplet", "full+npair", "full+binomial")


def check_gradients(instances, seed, names=GRAD_CHECK_NAMES, tol=1e-4):
    rng = np.random.default_rng(seed)
    results = []
    for name in names:
        worst = 0.0
        for _ in range(instances):
            f, x = _grad_check_fn(name, rng)
            worst = max(worst, fd_max_rel_error(f, x))
        results.append({"name": f"grad_{name}", "instances": instances,
                        "violations": int(worst > tol),
                        "worst_margin": float(worst)})
    return results


def run_verification(fuzz=1000, seed=1, grad_instances=20):
    checks = [
        check_ged_bound(fuzz, seed),
        check_mmd_bound(fuzz, seed + 1),
        check_negative_type(fuzz, seed + 2),
    ]
    checks.extend(check_gradients(grad_instances, seed + 3))
    return {"seed": seed, "fuzz": fuzz,
            "checks": checks,
            "passed": all(c["violations"] == 0 for c in checks)}
