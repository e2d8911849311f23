"""Finite metric spaces and brute-force metric diagnostics.

All spaces are stored as dense symmetric matrices of 64-bit floats; the
triangle inequality is enforced at construction with absolute tolerance
1e-12.  Operations here are pure; spaces are immutable once built.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path

from .errors import DisconnectedGraphError, MetricConstructionError, SizeCapError
from .moduli import Modulus, eval_modulus

__all__ = [
    "FiniteMetricSpace",
    "DoublingEstimate",
    "snowflake_distance",
    "shortest_path_metric",
    "parse_edge_list",
    "hausdorff_distance",
    "doubling_constant_bruteforce",
    "critical_radius_grid",
    "separated_net",
]

TRIANGLE_TOL = 1e-12


@dataclass(frozen=True)
class FiniteMetricSpace:
    """An indexed point set with an explicit distance matrix.

    Points are the indices ``0 .. n_points-1``; ``labels`` may attach
    coordinates or names to them but play no metric role.
    """

    dist: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", d)
        _validate_distance_matrix(d)
        d.setflags(write=False)
        if self.labels is not None and len(self.labels) != d.shape[0]:
            raise ValueError("labels length must match n_points")

    @property
    def n_points(self) -> int:
        return self.dist.shape[0]

    def distance(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n_points else 0.0

    def min_positive_distance(self) -> float:
        off = self.dist[~np.eye(self.n_points, dtype=bool)]
        return float(off.min()) if off.size else 0.0

    def restrict(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        """Subspace on the given indices (in the given order)."""
        idx = np.asarray(list(indices), dtype=int)
        labels = tuple(self.labels[i] for i in idx) if self.labels is not None else None
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], labels=labels)


def _validate_distance_matrix(d: np.ndarray) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MetricConstructionError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n == 0:
        raise MetricConstructionError("empty point set")
    if not np.all(np.isfinite(d)):
        raise MetricConstructionError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise MetricConstructionError("negative distances")
    if np.any(np.abs(np.diag(d)) > 0):
        raise MetricConstructionError("nonzero diagonal")
    if not np.array_equal(d, d.T):
        if np.max(np.abs(d - d.T)) > TRIANGLE_TOL:
            raise MetricConstructionError("distance matrix not symmetric")
    off = d[~np.eye(n, dtype=bool)]
    if off.size and np.any(off == 0):
        i, j = np.argwhere((d == 0) & ~np.eye(n, dtype=bool))[0]
        raise MetricConstructionError(f"distinct points {i}, {j} at distance 0")
    viol = _triangle_violation(d)
    if viol is not None:
        i, j, k, gap = viol
        raise MetricConstructionError(
            f"triangle inequality fails on ({i},{j},{k}) by {gap:.3e}"
        )


def _triangle_violation(d: np.ndarray) -> tuple[int, int, int, float] | None:
    """Worst triple with d(i,j) > d(i,k) + d(k,j) + tol, or None.

    Chunked over the middle index to keep memory at O(n^2) per step.
    """
    n = d.shape[0]
    worst = None
    worst_gap = TRIANGLE_TOL
    for k in range(n):
        via_k = d[:, k][:, None] + d[k, :][None, :]
        gap = d - via_k
        g = float(gap.max())
        if g > worst_gap:
            i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
            worst, worst_gap = (int(i), int(j), k, g), g
    return worst


def snowflake_distance(m: Modulus, s: FiniteMetricSpace) -> FiniteMetricSpace:
    """Apply omega elementwise to the distance matrix.

    For a subadditive modulus the result is again a metric; a modulus that
    violates subadditivity on the induced distance set raises
    MetricConstructionError (via matrix validation).
    """
    d = np.zeros_like(s.dist)
    iu = np.triu_indices(s.n_points, k=1)
    vals = np.array([eval_modulus(m, t) for t in s.dist[iu]])
    d[iu] = vals
    d.T[iu] = vals
    return FiniteMetricSpace(d, labels=s.labels)


def shortest_path_metric(
    edges: Iterable[tuple[int, int, float]], n_vertices: int
) -> FiniteMetricSpace:
    """Shortest-path metric of a connected, positively weighted graph."""
    best: dict[tuple[int, int], float] = {}
    for i, j, w in edges:
        if w <= 0:
            raise ValueError(f"edge ({i},{j}) has non-positive weight {w}")
        if not (0 <= i < n_vertices and 0 <= j < n_vertices):
            raise ValueError(f"edge ({i},{j}) out of range for {n_vertices} vertices")
        key = (min(i, j), max(i, j))
        best[key] = min(best.get(key, math.inf), float(w))
    rows, cols, data = [], [], []
    for (i, j), w in best.items():
        rows += [i, j]
        cols += [j, i]
        data += [w, w]
    graph = csr_matrix((data, (rows, cols)), shape=(n_vertices, n_vertices))
    d = _csgraph_shortest_path(graph, method="D", directed=False)
    if np.any(np.isinf(d)):
        i, j = np.argwhere(np.isinf(d))[0]
        raise DisconnectedGraphError(f"no path between vertices {i} and {j}")
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d)


def parse_edge_list(text: str) -> tuple[list[tuple[int, int, float]], int]:
    """Parse the ``i j w`` per-line edge format (0-based indices).

    Blank lines and lines starting with ``#`` are skipped.  Returns the edge
    list and the vertex count (1 + max index).
    """
    edges: list[tuple[int, int, float]] = []
    n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'i j w', got {raw!r}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if i < 0 or j < 0:
            raise ValueError(f"line {lineno}: negative vertex index")
        edges.append((i, j, w))
        n = max(n, i + 1, j + 1)
    return edges, n


def hausdorff_distance(s: FiniteMetricSpace, a: Sequence[int], b: Sequence[int]) -> float:
    """Hausdorff distance between two nonempty index subsets."""
    ia = np.asarray(list(a), dtype=int)
    ib = np.asarray(list(b), dtype=int)
    if ia.size == 0 or ib.size == 0:
        raise ValueError("subsets must be nonempty")
    block = s.dist[np.ix_(ia, ib)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def set_gap(s: FiniteMetricSpace, a: Sequence[int], b: Sequence[int]) -> float:
    """Smallest distance between two nonempty index subsets."""
    ia = np.asarray(list(a), dtype=int)
    ib = np.asarray(list(b), dtype=int)
    if ia.size == 0 or ib.size == 0:
        raise ValueError("subsets must be nonempty")
    return float(s.dist[np.ix_(ia, ib)].min())


@dataclass(frozen=True)
class DoublingEstimate:
    """Certificate that every ball B(x, 2r) is covered by <= constant r-balls."""

    constant: int
    radius_grid: tuple[float, ...]
    exact: bool = True


def _min_cover_size(universe: np.ndarray, balls: list[np.ndarray], exact: bool) -> int:
    """Minimum number of candidate balls covering ``universe`` (boolean masks)."""
    need = universe.copy()
    candidates = [b for b in balls if np.any(b & need)]
    if not np.any(need):
        return 1
    # greedy upper bound first
    greedy = 0
    rem = need.copy()
    order = sorted(range(len(candidates)), key=lambda t: -int((candidates[t] & rem).sum()))
    for t in order:
        if not rem.any():
            break
        gain = candidates[t] & rem
        if gain.any():
            rem &= ~candidates[t]
            greedy += 1
    if rem.any():
        raise MetricConstructionError("cover candidates cannot cover the ball")
    if not exact:
        return greedy
    for size in range(1, greedy):
        for combo in itertools.combinations(range(len(candidates)), size):
            mask = np.zeros_like(need)
            for t in combo:
                mask |= candidates[t]
            if not np.any(need & ~mask):
                return size
    return greedy


def critical_radius_grid(s: FiniteMetricSpace) -> list[float]:
    """Radii at which ball configurations can change, plus interval midpoints.

    Probing this grid makes the doubling estimate equal the true supremum
    over all radii (with open balls, configurations are constant between
    consecutive critical values d and d/2).
    """
    dists = sorted(set(float(t) for t in s.dist[np.triu_indices(s.n_points, k=1)] if t > 0))
    crit = sorted(set(dists) | set(d / 2 for d in dists))
    mids = [0.5 * (a + b) for a, b in zip(crit, crit[1:])]
    return sorted(set(crit) | set(mids) | {crit[-1] * 1.5}) if crit else []


def doubling_constant_bruteforce(
    s: FiniteMetricSpace,
    cap: int = 64,
    exact_max: int = 12,
    radii: Sequence[float] | None = None,
) -> DoublingEstimate:
    """Smallest C so every B(x, 2r), r a pairwise distance, is covered by C r-balls.

    Balls are open.  The cover search is an exhaustive set-cover certificate
    for n_points <= exact_max and a greedy upper bound above that.  The
    default probe grid is the set of pairwise distances; pass
    ``critical_radius_grid(s)`` to recover the exact supremum over all radii.
    """
    n = s.n_points
    if n > cap:
        raise SizeCapError(f"{n} points exceeds the doubling-probe cap {cap}")
    if radii is None:
        radii = sorted(set(float(t) for t in s.dist[np.triu_indices(n, k=1)] if t > 0))
    exact = n <= exact_max
    best = 1
    for r in radii:
        balls = [s.dist[v] < r for v in range(n)]
        for x in range(n):
            target = s.dist[x] < 2 * r
            best = max(best, _min_cover_size(target, balls, exact))
    return DoublingEstimate(constant=best, radius_grid=tuple(radii), exact=exact)


def separated_net(s: FiniteMetricSpace, delta: float) -> list[int]:
    """Greedy maximal delta-separated subset, deterministic by index order.

    The result is pairwise >= delta apart and every point lies within delta
    of it.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    net: list[int] = []
    for i in range(s.n_points):
        if all(s.dist[i, j] >= delta for j in net):
            net.append(i)
    return net
