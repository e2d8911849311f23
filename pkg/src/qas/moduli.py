"""Moduli of continuity with sub-multiplicative companion bounds.

A modulus here is a strictly increasing, subadditive function omega with
omega(0) = 0 together with an increasing companion h such that
omega(s*t) <= h(s) * omega(t).  Three families are provided:

* ``holder(L, alpha, beta)``: omega(t) = L * t**alpha * log(1+t)**beta with
  0 < alpha <= 1 and 0 <= beta <= 1 - alpha; companion
  h(s) = s**alpha * max(1, s)**beta.
* ``log_modulus(beta)``: omega(t) = 1/|log t|**beta near zero, continued
  linearly past t = e**-(beta+1).  Its decay at zero is slower than any power
  law, which forces the companion to stay >= 1 below s = 1 (a vanishing
  companion would iterate to power-law decay); we use
  h(s) = max(1, s**beta, s), the smallest closed form that is valid
  everywhere.
* ``custom``: a sampled table with linear interpolation between samples;
  evaluation outside the sampled range is rejected, and the companion is a
  grid estimate flagged as approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["Modulus", "holder_modulus", "log_modulus", "custom_modulus", "eval_modulus"]

_DEFAULT_GRID = np.concatenate([np.geomspace(1e-6, 1.0, 25), np.linspace(1.0, 8.0, 15)])


@dataclass(frozen=True)
class Modulus:
    """A modulus of continuity with companion bound ``h``.

    Attributes
    ----------
    kind : str
        One of ``"holder"``, ``"log"``, ``"custom"``.
    fn : callable
        Evaluates omega(t) for t >= 0.
    h_bound : callable
        Companion h with omega(s*t) <= h(s)*omega(t); for custom moduli this
        is a grid estimate and ``h_is_estimate`` is True.
    params : dict
        Raw construction parameters, for reporting/serialization.
    domain_max : float
        Largest admissible argument (inf unless custom).
    """

    kind: str
    fn: Callable[[float], float]
    h_bound: Callable[[float], float]
    params: dict = field(default_factory=dict)
    domain_max: float = math.inf
    h_is_estimate: bool = False

    def __call__(self, t: float) -> float:
        return eval_modulus(self, t)

    def h_dagger(self, target: float, grid: np.ndarray | None = None) -> float:
        """Generalized inverse inf{s : h(s) >= target} probed on a grid.

        Returns ``math.inf`` (the infimum of the empty set) when h never
        reaches ``target`` on the probed grid.
        """
        s_grid = _DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
        vals = np.array([self.h_bound(float(s)) for s in s_grid])
        hits = np.nonzero(vals >= target)[0]
        if hits.size == 0:
            return math.inf
        # refine by bisection between the last miss and the first hit
        hi = float(s_grid[hits[0]])
        lo = 0.0 if hits[0] == 0 else float(s_grid[hits[0] - 1])
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.h_bound(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi


def eval_modulus(m: Modulus, t: float) -> float:
    """Evaluate omega(t); t must be >= 0 and inside the modulus domain."""
    if not np.isfinite(t):
        raise ValueError(f"modulus argument must be finite, got {t}")
    if t < 0:
        raise ValueError(f"modulus argument must be nonnegative, got {t}")
    if t > m.domain_max * (1 + 1e-12):
        raise ValueError(
            f"argument {t} outside sampled range [0, {m.domain_max}] of custom modulus"
        )
    return float(m.fn(float(t)))


def holder_modulus(L: float = 1.0, alpha: float = 1.0, beta: float = 0.0) -> Modulus:
    """omega(t) = L * t**alpha * log(1+t)**beta, concave hence subadditive."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    if not (0 <= beta <= 1 - alpha):
        raise ValueError("beta must lie in [0, 1 - alpha]")

    def fn(t: float) -> float:
        if t == 0.0:
            return 0.0
        out = L * t**alpha
        if beta > 0:
            out *= math.log1p(t) ** beta
        return out

    def h(s: float) -> float:
        if s < 0:
            raise ValueError("companion argument must be nonnegative")
        return s**alpha * max(1.0, s) ** beta

    return Modulus(kind="holder", fn=fn, h_bound=h, params={"L": L, "alpha": alpha, "beta": beta})


def log_modulus(beta: float = 1.0) -> Modulus:
    """Sub-Holder modulus 1/|log t|**beta near 0 with linear continuation."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    knee = math.exp(-(beta + 1.0))
    level = 1.0 / (beta + 1.0) ** beta
    slope = beta * math.exp(beta + 1.0) / (beta + 1.0) ** (beta + 1.0)

    def fn(t: float) -> float:
        if t == 0.0:
            return 0.0
        if t <= knee:
            return 1.0 / abs(math.log(t)) ** beta
        return level + slope * (t - knee)

    def h(s: float) -> float:
        if s < 0:
            raise ValueError("companion argument must be nonnegative")
        # monotonicity gives ratio <= 1 below s = 1; concavity gives <= s above
        return max(1.0, s**beta, s)

    return Modulus(kind="log", fn=fn, h_bound=h, params={"beta": beta})


def custom_modulus(samples: Sequence[tuple[float, float]]) -> Modulus:
    """Modulus from a sampled table, linearly interpolated, no extrapolation.

    The table must start at (0, 0) and be strictly increasing in both
    coordinates.  Subadditivity is the caller's responsibility and is probed
    by the validation helpers in the test-suite; the companion bound is
    estimated by grid maximization of omega(u*s)/omega(u) and flagged.
    """
    pts = sorted((float(t), float(w)) for t, w in samples)
    if len(pts) < 2:
        raise ValueError("need at least two samples")
    ts = np.array([p[0] for p in pts])
    ws = np.array([p[1] for p in pts])
    if ts[0] != 0.0 or ws[0] != 0.0:
        raise ValueError("custom modulus table must start at (0, 0)")
    if np.any(np.diff(ts) <= 0) or np.any(np.diff(ws) <= 0):
        raise ValueError("custom modulus table must be strictly increasing")
    t_max = float(ts[-1])

    def fn(t: float) -> float:
        return float(np.interp(t, ts, ws))

    def h(s: float) -> float:
        if s < 0:
            raise ValueError("companion argument must be nonnegative")
        if s == 0:
            return 0.0
        # ratio omega(u s)/omega(u) maximized over u with both points in range
        us = ts[1:][ts[1:] * s <= t_max]
        if us.size == 0:
            us = np.array([t_max / s])
        ratios = [fn(float(u * s)) / fn(float(u)) for u in us if fn(float(u)) > 0]
        return max(ratios) if ratios else 1.0

    return Modulus(
        kind="custom",
        fn=fn,
        h_bound=h,
        params={"samples": pts},
        domain_max=t_max,
        h_is_estimate=True,
    )
