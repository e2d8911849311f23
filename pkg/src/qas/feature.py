"""Feature maps into Euclidean feature spaces and finite-rank truncations.

The feature spaces are concrete R^D carrying either the sup norm (distance
profiles of graph points) or the l2 norm (Fourier coefficients).  Truncation
operators are coordinate projections, which realize the bounded approximation
property with norm bound 1 in both norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SaturationError
from .metric import FiniteMetricSpace, separated_net

__all__ = [
    "FeatureMap",
    "BapFamily",
    "kuratowski_embed",
    "landmark_embed",
    "schauder_truncate",
    "fourier_feature_map",
    "bap_rate",
    "compressed_feature",
]


@dataclass(frozen=True)
class FeatureMap:
    """A continuous injective map from a domain into (R^target_dim, target_norm)."""

    kind: str
    evaluate: Callable[[object], np.ndarray]
    target_dim: int
    target_norm: str  # "linf" or "l2"
    meta: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.evaluate(x), dtype=float)
        if out.shape != (self.target_dim,):
            raise ValueError(f"feature map produced shape {out.shape}, expected ({self.target_dim},)")
        return out

    def norm(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.max(np.abs(v))) if self.target_norm == "linf" else float(np.linalg.norm(v))


def kuratowski_embed(s: FiniteMetricSpace, anchors) -> FeatureMap:
    """x -> (d(x, a))_{a in anchors}; with all points as anchors this is an
    isometry into the sup norm."""
    anchor_list = list(anchors)
    if not anchor_list:
        raise ValueError("anchors must be nonempty")
    idx = np.asarray(anchor_list, dtype=int)

    def evaluate(x: int) -> np.ndarray:
        return s.dist[int(x), idx]

    return FeatureMap(
        kind="kuratowski",
        evaluate=evaluate,
        target_dim=idx.size,
        target_norm="linf",
        meta={"anchors": tuple(int(a) for a in idx)},
    )


def landmark_embed(s: FiniteMetricSpace, delta: float) -> FeatureMap:
    """Distance profile against a greedy maximal delta-separated landmark set.

    The measured bi-Lipschitz constants over all point pairs are stored in the
    metadata (lower can be zero only if the map fails injectivity on the
    sampled domain).
    """
    landmarks = separated_net(s, delta)
    fm = kuratowski_embed(s, landmarks)
    lo, hi = np.inf, 0.0
    for i in range(s.n_points):
        fi = fm(i)
        for j in range(i + 1, s.n_points):
            ratio = fm.norm(fi - fm(j)) / s.dist[i, j]
            lo, hi = min(lo, ratio), max(hi, ratio)
    meta = dict(fm.meta)
    meta.update({"delta": delta, "landmarks": tuple(landmarks),
                 "bilip_lower": float(lo if np.isfinite(lo) else 1.0),
                 "bilip_upper": float(hi if hi > 0 else 1.0)})
    return FeatureMap(kind="landmark", evaluate=fm.evaluate, target_dim=fm.target_dim,
                      target_norm="linf", meta=meta)


def schauder_truncate(u: np.ndarray, n: int) -> np.ndarray:
    """First n real Fourier coefficients of samples on a uniform circle grid.

    The coefficient ordering is (mean, cos 1, sin 1, cos 2, sin 2, ...) with
    amplitude normalization, so u = cos(theta) yields a unit coefficient in
    slot 1.  Requires the grid size G to be a power of two and n <= G/2.
    """
    u = np.asarray(u, dtype=float)
    g = u.size
    if g < 2 or g & (g - 1) != 0:
        raise ValueError(f"grid size {g} must be a power of two")
    if not (1 <= n <= g // 2):
        raise ValueError(f"truncation order {n} must lie in [1, {g // 2}]")
    spec = np.fft.rfft(u) / g
    coeffs = np.empty(n)
    coeffs[0] = spec[0].real
    for i in range(1, n):
        k = (i + 1) // 2
        coeffs[i] = 2.0 * (spec[k].real if i % 2 == 1 else -spec[k].imag)
    return coeffs


def fourier_synthesize(coeffs: np.ndarray, grid_size: int) -> np.ndarray:
    """Inverse of ``schauder_truncate`` onto a uniform grid (zero tail)."""
    coeffs = np.asarray(coeffs, dtype=float)
    theta = np.arange(grid_size) * (2.0 * np.pi / grid_size)
    out = np.full(grid_size, coeffs[0])
    for i in range(1, coeffs.size):
        k = (i + 1) // 2
        out += coeffs[i] * (np.cos(k * theta) if i % 2 == 1 else np.sin(k * theta))
    return out


def fourier_feature_map(grid_size: int, n: int) -> FeatureMap:
    """Feature map sending grid samples to their first n Fourier coefficients."""
    return FeatureMap(
        kind="schauder",
        evaluate=lambda u: schauder_truncate(u, n),
        target_dim=n,
        target_norm="l2",
        meta={"grid_size": grid_size},
    )


@dataclass(frozen=True)
class BapFamily:
    """Coordinate-truncation operators T_n realizing the BAP with bound 1.

    ``apply(n, x)`` zeroes every coordinate past the first n; composition
    therefore satisfies T_n T_m = T_min(n, m) and ||T_n||_op = 1 in both the
    sup and l2 norms.
    """

    max_rank: int
    norm: str = "linf"
    norm_bound: float = 1.0

    def apply(self, n: int, x: np.ndarray) -> np.ndarray:
        if not (1 <= n <= self.max_rank):
            raise ValueError(f"rank {n} outside [1, {self.max_rank}]")
        x = np.asarray(x, dtype=float)
        out = x.copy()
        out[n:] = 0.0
        return out

    def _norm(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(v))) if self.norm == "linf" else float(np.linalg.norm(v))


def bap_rate(b: BapFamily, vectors, eps: float) -> int:
    """min{n : max_x ||T_n x - x|| <= eps} over the finite probe set."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = [np.asarray(v, dtype=float) for v in vectors]
    for n in range(1, b.max_rank + 1):
        if all(b._norm(b.apply(n, v) - v) <= eps for v in pts):
            return n
    raise SaturationError(
        f"no truncation rank up to {b.max_rank} achieves tolerance {eps}"
    )


def compressed_feature(phi: FeatureMap, b: BapFamily, d: int) -> FeatureMap:
    """The approximate feature map: first d coordinates of phi, with the
    pullback of phi's norm restricted to those coordinates."""
    if not (1 <= d <= phi.target_dim):
        raise ValueError(f"compression dimension {d} outside [1, {phi.target_dim}]")
    if b.max_rank < d:
        raise ValueError("truncation family rank too small")

    def evaluate(x) -> np.ndarray:
        return phi(x)[:d]

    meta = dict(phi.meta)
    meta["compressed_from"] = phi.target_dim
    return FeatureMap(
        kind=phi.kind,
        evaluate=evaluate,
        target_dim=d,
        target_norm=phi.target_norm,
        meta=meta,
    )
