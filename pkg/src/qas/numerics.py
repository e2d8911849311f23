"""Small exact kernels shared by every pipeline.

Simplex projection uses the sort-then-threshold algorithm, which is exact in
exact arithmetic.  ``ceil_index`` clamps out-of-range values into [1, Q]
because head parameters are trainable and may drift; the clamp is reported
through the flagged variant rather than raised.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "project_simplex",
    "softmax",
    "attention_layer",
    "ceil_index",
    "ceil_index_flagged",
]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean orthogonal projection onto the probability simplex.

    Returns argmin_{w in simplex} ||w - v||_2 via sorting and thresholding.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a nonempty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("simplex projection requires finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / ks > 0
    rho = int(ks[cond][-1])
    tau = (1.0 - css[rho - 1]) / rho
    w = np.maximum(v + tau, 0.0)
    return w


def softmax(v: np.ndarray) -> np.ndarray:
    """Stable softmax with max-shift; lands in the interior of the simplex."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax requires finite entries")
    z = np.exp(v - v.max())
    return z / z.sum()


def attention_layer(u: np.ndarray, values: np.ndarray) -> np.ndarray:
    """softmax(u) applied as convex weights over the rows of ``values``."""
    u = np.asarray(u, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or u.ndim != 1 or values.shape[0] != u.shape[0]:
        raise ValueError(
            f"shape mismatch: u has length {u.shape}, values has shape {values.shape}"
        )
    return softmax(u) @ values


def ceil_index(z: float, q: int) -> int:
    """ceil(z) clamped into [1, q]; see ``ceil_index_flagged`` for the clamp flag."""
    return ceil_index_flagged(z, q)[0]


def ceil_index_flagged(z: float, q: int) -> tuple[int, bool]:
    """(ceil(z) clamped into [1, q], whether clamping occurred)."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    raw = math.ceil(z)
    idx = min(max(raw, 1), q)
    return idx, idx != raw
