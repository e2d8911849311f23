"""Finitely supported probability measures and exact Wasserstein-1 distances.

A measure lives over a *carrier*: any object exposing ``distance(a, b)`` on
atom values.  For a ``FiniteMetricSpace`` the atoms are point indices; other
carriers (Euclidean vectors, SPD matrices, circle angles) use their point
values directly.  W1 between two measures on the same carrier is computed
exactly by successive-shortest-path min-cost flow on the bipartite support
graph; no entropic regularization anywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import SizeCapError
from .metric import FiniteMetricSpace
from .numerics import ceil_index, project_simplex
from .rng import rng_from_seed

__all__ = [
    "DiscreteMeasure",
    "EuclideanCarrier",
    "dirac",
    "w1_to_dirac",
    "w1_discrete",
    "mix_wasserstein",
    "quantize_measure",
    "quantized_mixing_wasserstein",
    "sample",
    "finite_set_success_bound",
]

WEIGHT_TOL = 1e-12
SUPPORT_CAP = 256


class EuclideanCarrier:
    """R^d with the l2 or l1 norm as a measure carrier."""

    def __init__(self, dim: int, norm: str = "l2"):
        if norm not in ("l2", "l1"):
            raise ValueError("norm must be 'l2' or 'l1'")
        self.dim = dim
        self.norm = norm

    def distance(self, a, b) -> float:
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return float(np.linalg.norm(diff, ord=2 if self.norm == "l2" else 1))

    def atom_key(self, a):
        return tuple(np.asarray(a, dtype=float).ravel().tolist())


def _atom_key(space, atom):
    if hasattr(space, "atom_key"):
        return space.atom_key(atom)
    return atom


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure supported on finitely many carrier points.

    ``atoms`` may repeat; ``weights`` is a simplex vector of equal length.
    """

    space: Any
    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if len(self.atoms) != w.size or w.size == 0:
            raise ValueError("atoms and weights must be nonempty and equal length")
        if np.any(w < -WEIGHT_TOL):
            raise ValueError(f"negative weight {w.min()}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()}, not 1")
        if isinstance(self.space, FiniteMetricSpace):
            for a in self.atoms:
                if not (0 <= int(a) < self.space.n_points):
                    raise IndexError(f"atom index {a} out of range")
        w.setflags(write=False)

    def support_size(self) -> int:
        return len(self.atoms)

    def dedup(self) -> "DiscreteMeasure":
        """Merge coincident atoms (summing weights) and drop zero-weight atoms."""
        merged: dict[Any, float] = {}
        rep: dict[Any, Any] = {}
        for a, w in zip(self.atoms, self.weights):
            k = _atom_key(self.space, a)
            merged[k] = merged.get(k, 0.0) + float(w)
            rep.setdefault(k, a)
        atoms = [rep[k] for k, w in merged.items() if w > 0.0]
        weights = [w for w in merged.values() if w > 0.0]
        return DiscreteMeasure(self.space, tuple(atoms), np.array(weights))

    def to_json(self) -> str:
        atoms = [a.tolist() if isinstance(a, np.ndarray) else a for a in self.atoms]
        return json.dumps({"atoms": atoms, "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, space, text: str) -> "DiscreteMeasure":
        doc = json.loads(text)
        return cls(space, tuple(doc["atoms"]), np.asarray(doc["weights"], dtype=float))


def dirac(space, atom) -> DiscreteMeasure:
    return DiscreteMeasure(space, (atom,), np.array([1.0]))


def w1_to_dirac(mu: DiscreteMeasure, y) -> float:
    """W1(mu, delta_y) in closed form: the expectation of d(., y) under mu."""
    return float(
        sum(w * mu.space.distance(a, y) for a, w in zip(mu.atoms, mu.weights))
    )


def _min_cost_transport(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Exact transportation cost by successive shortest paths with potentials.

    ``a`` and ``b`` are positive supplies/demands summing to the same total;
    ``cost`` is the (len(a), len(b)) nonnegative cost matrix.
    """
    m, n = cost.shape
    supply = a.copy()
    demand = b.copy()
    flow = np.zeros((m, n))
    pot = np.zeros(m + n)
    max_rounds = 8 * (m + n) + 64

    for _ in range(max_rounds):
        if supply.sum() <= 1e-15:
            break
        dist = np.full(m + n, math.inf)
        prev = np.full(m + n, -1, dtype=int)
        done = np.zeros(m + n, dtype=bool)
        dist[:m][supply > 1e-15] = 0.0
        while True:
            cand = np.where(~done & np.isfinite(dist))[0]
            if cand.size == 0:
                break
            node = int(cand[np.argmin(dist[cand])])
            done[node] = True
            if node < m:
                i = node
                nd = dist[i] + cost[i] + pot[i] - pot[m:]
                upd = nd < dist[m:] - 1e-18
                dist[m:][upd] = nd[upd]
                prev[m:][upd] = i
            else:
                j = node - m
                has_flow = flow[:, j] > 1e-15
                nd = dist[node] - cost[:, j] + pot[node] - pot[:m]
                upd = has_flow & (nd < dist[:m] - 1e-18)
                dist[:m][upd] = nd[upd]
                prev[:m][upd] = node
        sinks = np.where(demand > 1e-15)[0] + m
        reach = sinks[np.isfinite(dist[sinks])]
        if reach.size == 0:
            raise ArithmeticError("transportation problem infeasible (mass mismatch)")
        t = int(reach[np.argmin(dist[reach])])
        finite = np.isfinite(dist)
        pot[finite] += np.minimum(dist[finite], dist[t])
        # trace path, collect bottleneck
        path = [t]
        while prev[path[-1]] >= 0:
            path.append(int(prev[path[-1]]))
        path.reverse()
        src = path[0]
        bottleneck = min(supply[src], demand[t - m])
        for u, v in zip(path, path[1:]):
            if u >= m:  # backward arc sink->source
                bottleneck = min(bottleneck, flow[v, u - m])
        for u, v in zip(path, path[1:]):
            if u < m:
                flow[u, v - m] += bottleneck
            else:
                flow[v, u - m] -= bottleneck
        supply[src] -= bottleneck
        demand[t - m] -= bottleneck
    if supply.sum() > 1e-10:
        raise ArithmeticError("min-cost flow failed to route all mass")
    return float((flow * cost).sum())


def w1_discrete(mu: DiscreteMeasure, nu: DiscreteMeasure, cap: int = SUPPORT_CAP) -> float:
    """Exact W1 between two measures on the same carrier."""
    if mu.space is not nu.space:
        raise ValueError("measures live on different carriers")
    mu = mu.dedup()
    nu = nu.dedup()
    if mu.support_size() + nu.support_size() > cap:
        raise SizeCapError(
            f"combined support {mu.support_size() + nu.support_size()} exceeds cap {cap}"
        )
    cost = np.array(
        [[mu.space.distance(x, y) for y in nu.atoms] for x in mu.atoms], dtype=float
    )
    return _min_cost_transport(mu.weights.copy(), nu.weights.copy(), cost)


def mix_wasserstein(w: np.ndarray, measures: Sequence[DiscreteMeasure]) -> DiscreteMeasure:
    """Convex combination sum_n w_n mu_n, atoms concatenated.

    This is the prototype mixing function on the space of measures; it is
    approximately simplicial with constants (1, 1).
    """
    w = np.asarray(w, dtype=float)
    if w.size != len(measures) or w.size == 0:
        raise ValueError("weight vector length must match the number of measures")
    space = measures[0].space
    if any(m.space is not space for m in measures):
        raise ValueError("all measures must share one carrier")
    atoms: list = []
    weights: list[float] = []
    for wn, m in zip(w, measures):
        atoms.extend(m.atoms)
        weights.extend(wn * m.weights)
    return DiscreteMeasure(space, tuple(atoms), np.array(weights)).dedup()


def quantize_measure(
    u: np.ndarray, z: np.ndarray, space, dense_seq: Sequence
) -> DiscreteMeasure:
    """Measure sum_i [P_simplex(u)]_i * dirac(dense_seq[ceil(z_i)]).

    ``dense_seq`` is the carrier's enumerated dense sequence; ceil indices are
    1-based and clamped into its range.
    """
    if len(dense_seq) == 0:
        raise ValueError("dense sequence must be nonempty")
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    if u.shape != z.shape or u.ndim != 1:
        raise ValueError("u and z must be 1-d vectors of equal length")
    probs = project_simplex(u)
    atoms = tuple(dense_seq[ceil_index(zi, len(dense_seq)) - 1] for zi in z)
    return DiscreteMeasure(space, atoms, probs).dedup()


def quantized_mixing_wasserstein(
    w: np.ndarray,
    params: Sequence[tuple[np.ndarray, np.ndarray]],
    space,
    dense_seq: Sequence,
) -> DiscreteMeasure:
    """Mixture sum_i w_i * quantize_measure(u_i, z_i) of quantized blocks."""
    w = np.asarray(w, dtype=float)
    if w.size != len(params):
        raise ValueError("weight length must match the number of (u, z) blocks")
    blocks = [quantize_measure(u, z, space, dense_seq) for u, z in params]
    return mix_wasserstein(w, blocks)


def sample(mu: DiscreteMeasure, rng_seed: int, size: int | None = None):
    """Draw atom(s) with the measure's weights; deterministic given the seed."""
    rng = rng_from_seed(rng_seed)
    p = np.maximum(mu.weights, 0.0)
    p = p / p.sum()
    if size is None:
        return mu.atoms[int(rng.choice(len(mu.atoms), p=p))]
    idx = rng.choice(len(mu.atoms), p=p, size=size)
    return [mu.atoms[int(k)] for k in idx]


def finite_set_success_bound(eps: float, n: int) -> float:
    """Lower bound (1 - eps/n)^n on uniform success over n sampled points."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    if eps / n > 1:
        raise ValueError(f"eps/n = {eps / n} exceeds 1; the bound is vacuous")
    return (1.0 - eps / n) ** n
