"""Statistical distances between finite point sets: generalized energy
distance, squared MMD, distance-induced kernels, and negative-type checks.

All expectations are V-statistics (every ordered pair including self-pairs,
uniform weights), which makes the linear-kernel MMD identity with half the
energy distance exact.
"""

from dataclasses import dataclass

import numpy as np

from .confusion import ClassGroup, energy_confusion
from .errors import ConfigError


@dataclass
class Semimetric:
    """squared_euclidean, euclidean, or power(q) of squared Euclidean.

    power(q) with 0 < q < 1 stays of negative type; larger exponents are
    allowed (useful as counterexamples) but lose that guarantee.
    """
    kind: str = "squared_euclidean"
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("squared_euclidean", "euclidean", "power"):
            raise ConfigError(f"unknown semimetric {self.kind!r}")
        if self.kind == "power" and self.q <= 0:
            raise ConfigError("power semimetric requires q > 0")


def semimetric_eval(rho: Semimetric, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    sq = float(np.sum((x - y) ** 2))
    if rho.kind == "squared_euclidean":
        return sq
    if rho.kind == "euclidean":
        return np.sqrt(sq)
    return sq ** rho.q


def _rho_matrix(rho: Semimetric, a, b):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    sq = (np.sum(a ** 2, axis=1)[:, None] + np.sum(b ** 2, axis=1)[None, :]
          - 2.0 * a @ b.T)
    sq = np.maximum(sq, 0.0)
    if rho.kind == "squared_euclidean":
        return sq
    if rho.kind == "euclidean":
        return np.sqrt(sq)
    return sq ** rho.q


@dataclass
class Kernel:
    """linear (x.y) or distance_induced(rho, z0)."""
    kind: str = "linear"
    rho: Semimetric = None
    z0: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("linear", "distance_induced"):
            raise ConfigError(f"unknown kernel {self.kind!r}")
        if self.kind == "distance_induced" and self.rho is None:
            raise ConfigError("distance_induced kernel requires a semimetric")

    def matrix(self, a, b):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if self.kind == "linear":
            return a @ b.T
        z0 = np.zeros(a.shape[1]) if self.z0 is None else np.asarray(self.z0)
        ra = _rho_matrix(self.rho, a, z0[None, :])  # (n, 1)
        rb = _rho_matrix(self.rho, b, z0[None, :])
        return 0.5 * (ra + rb.T - _rho_matrix(self.rho, a, b))


def ged(x_set, y_set, rho: Semimetric) -> float:
    """Generalized energy distance 2*E_xy - E_xx - E_yy under rho."""
    x = np.atleast_2d(np.asarray(x_set, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y_set, dtype=np.float64))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("ged requires non-empty point sets")
    e_xy = _rho_matrix(rho, x, y).mean()
    e_xx = _rho_matrix(rho, x, x).mean()
    e_yy = _rho_matrix(rho, y, y).mean()
    return float(2.0 * e_xy - e_xx - e_yy)


def mmd_sq(x_set, y_set, kernel: Kernel) -> float:
    """Squared maximum mean discrepancy, V-statistic form."""
    x = np.atleast_2d(np.asarray(x_set, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y_set, dtype=np.float64))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("mmd_sq requires non-empty point sets")
    val = float(kernel.matrix(x, x).mean() + kernel.matrix(y, y).mean()
                - 2.0 * kernel.matrix(x, y).mean())
    if kernel.kind == "linear":
        closed = float(np.sum((x.mean(axis=0) - y.mean(axis=0)) ** 2))
        assert abs(val - closed) <= 1e-9 * max(1.0, abs(closed))
    return val


def distance_induced_kernel_gram(points, rho: Semimetric, z0) -> np.ndarray:
    """Gram matrix of k(a,b) = (rho(a,z0) + rho(b,z0) - rho(a,b)) / 2."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    z0 = np.asarray(z0, dtype=np.float64)
    if z0.shape[0] != pts.shape[1]:
        raise ValueError(f"z0 dimension {z0.shape[0]} != points {pts.shape[1]}")
    k = Kernel("distance_induced", rho, z0)
    gram = k.matrix(pts, pts)
    return 0.5 * (gram + gram.T)  # exact symmetry


def negative_type_witness(points, alphas, rho: Semimetric) -> float:
    """sum_ij alpha_i alpha_j rho(z_i, z_j) for zero-sum alphas; <= 0 iff
    the configuration respects negative type.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    a = np.asarray(alphas, dtype=np.float64)
    if len(a) != pts.shape[0]:
        raise ValueError("alphas length must match points")
    if abs(a.sum()) > 1e-12:
        raise ValueError(f"alphas must sum to 0, got {a.sum()}")
    return float(a @ _rho_matrix(rho, pts, pts) @ a)


def energy_confusion_sets(x_set, y_set) -> float:
    """Mean squared cross distance between two point sets, computed with
    the training-side implementation.
    """
    x = np.atleast_2d(np.asarray(x_set, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y_set, dtype=np.float64))
    emb = np.vstack([x, y])
    gi = ClassGroup(0, list(range(len(x))))
    gj = ClassGroup(1, list(range(len(x), len(x) + len(y))))
    return energy_confusion(emb, gi, gj).value


def check_upper_bounds_ged(x_set, y_set):
    """(ec, ged/2, ec >= ged/2 - 1e-9) for the squared Euclidean semimetric."""
    ec = energy_confusion_sets(x_set, y_set)
    half = 0.5 * ged(x_set, y_set, Semimetric("squared_euclidean"))
    return ec, half, ec >= half - 1e-9


def check_upper_bounds_mmd(x_set, y_set):
    """(ec, mmd^2, ec >= mmd^2 - 1e-9) for the linear kernel; also asserts
    the exact identity mmd^2 = ged/2.
    """
    ec = energy_confusion_sets(x_set, y_set)
    mmd = mmd_sq(x_set, y_set, Kernel("linear"))
    half = 0.5 * ged(x_set, y_set, Semimetric("squared_euclidean"))
    if abs(mmd - half) > 1e-9 * max(1.0, abs(half)):
        raise AssertionError(f"mmd^2 {mmd} != ged/2 {half}")
    return ec, mmd, ec >= mmd - 1e-9
