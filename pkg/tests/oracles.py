"""Independent oracles the tests check production code against.

Each oracle deliberately uses a different method than the code under test:
linear programming for transport and hull membership, exhaustive active-set
enumeration for the simplex projection, path enumeration for graph metrics,
Riemann sums for areas, and direct trigonometric quadrature for Fourier
coefficients.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def w1_lp(atoms_a, weights_a, atoms_b, weights_b, dist_fn) -> float:
    """Optimal transport cost by LP over couplings (highs solver)."""
    m, n = len(atoms_a), len(atoms_b)
    cost = np.array([[dist_fn(x, y) for y in atoms_b] for x in atoms_a]).ravel()
    a_eq = []
    for i in range(m):
        row = np.zeros((m, n))
        row[i, :] = 1.0
        a_eq.append(row.ravel())
    for j in range(n):
        row = np.zeros((m, n))
        row[:, j] = 1.0
        a_eq.append(row.ravel())
    b_eq = np.concatenate([weights_a, weights_b])
    res = linprog(cost, A_eq=np.array(a_eq), b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def project_simplex_qp(v: np.ndarray) -> np.ndarray:
    """Exhaustive active-set projection: try every support set, keep the
    feasible candidate closest to v."""
    v = np.asarray(v, dtype=float)
    n = v.size
    best, best_d = None, np.inf
    for r in range(1, n + 1):
        for support in itertools.combinations(range(n), r):
            w = np.zeros(n)
            s = np.array(support)
            w[s] = v[s] + (1.0 - v[s].sum()) / r
            if np.all(w[s] >= -1e-15):
                d = float(np.sum((w - v) ** 2))
                if d < best_d:
                    best, best_d = np.maximum(w, 0.0), d
    return best


def shortest_paths_bruteforce(edges, n) -> np.ndarray:
    """All-pairs shortest paths by Bellman-Ford relaxation (no scipy)."""
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for i, j, w in edges:
        d[i, j] = min(d[i, j], w)
        d[j, i] = min(d[j, i], w)
    for _ in range(n):
        for i, j, w in edges:
            d = np.minimum(d, d[:, [i]] + w + d[[j], :])
            d = np.minimum(d, d[:, [j]] + w + d[[i], :])
    return d


def levy_area_riemann(path_fn, t0: float, t1: float, n_steps: int = 200_000) -> float:
    """(1/2) * integral of (x1 dx2 - x2 dx1) along the path by Riemann sums."""
    ts = np.linspace(t0, t1, n_steps + 1)
    pts = np.array([path_fn(t) for t in ts])
    mid = 0.5 * (pts[1:] + pts[:-1])
    d = np.diff(pts, axis=0)
    return float(0.5 * np.sum(mid[:, 0] * d[:, 1] - mid[:, 1] * d[:, 0]))


def in_convex_hull_lp(point, vertices, tol: float = 1e-9) -> bool:
    """LP feasibility: does point = sum w_i v_i with w in the simplex?"""
    vertices = np.asarray(vertices, dtype=float)
    point = np.asarray(point, dtype=float)
    n = vertices.shape[0]
    a_eq = np.vstack([vertices.T, np.ones(n)])
    b_eq = np.concatenate([point, [1.0]])
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return False
    recon = vertices.T @ res.x
    return bool(np.max(np.abs(recon - point)) <= tol)


def fourier_coeff_quadrature(u: np.ndarray, index: int) -> float:
    """Coefficient in the (mean, cos1, sin1, cos2, ...) ordering by direct sums."""
    g = u.size
    theta = np.arange(g) * (2 * np.pi / g)
    if index == 0:
        return float(u.mean())
    k = (index + 1) // 2
    basis = np.cos(k * theta) if index % 2 == 1 else np.sin(k * theta)
    return float(2.0 * (u * basis).mean())
