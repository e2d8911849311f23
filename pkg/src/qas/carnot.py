"""Step-2 free nilpotent group, path signatures, and an ODE flow oracle.

Group elements are kept in logarithmic coordinates (increment vector a,
antisymmetric Levy-area matrix A); the step-2 Baker-Campbell-Hausdorff law
then closes in these coordinates.  Signatures of piecewise-linear paths are
assembled segment-by-segment with Chen multiplication.  The flow oracle
integrates dy = V(y) dx with RK4 and step halving; at desk scale smooth
drivers need no rough-path integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Step2GroupElement",
    "PiecewiseLinearPath",
    "group_multiply",
    "group_inverse",
    "group_identity",
    "signature_level2",
    "tangent_distance",
    "cc_homogeneous_norm",
    "carnot_dilation",
    "rde_flow_oracle",
    "TangentCarrier",
]

ANTISYM_TOL = 1e-12


@dataclass(frozen=True)
class Step2GroupElement:
    """Log coordinates (a, A) with A antisymmetric."""

    a: np.ndarray
    area: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        m = np.asarray(self.area, dtype=float)
        if a.ndim != 1 or m.shape != (a.size, a.size):
            raise ValueError(f"incompatible shapes {a.shape} and {m.shape}")
        if np.max(np.abs(m + m.T)) > ANTISYM_TOL:
            raise ValueError("area matrix must be antisymmetric")
        a.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "area", m)

    @property
    def dim(self) -> int:
        return self.a.size

    def flat(self) -> np.ndarray:
        """Concatenated (a, A) coordinates."""
        return np.concatenate([self.a, self.area.ravel()])


def group_identity(d: int) -> Step2GroupElement:
    return Step2GroupElement(np.zeros(d), np.zeros((d, d)))


def group_multiply(g: Step2GroupElement, h: Step2GroupElement) -> Step2GroupElement:
    """BCH product in log coordinates: (a+b, A+B+(a(x)b - b(x)a)/2)."""
    if g.dim != h.dim:
        raise ValueError("dimension mismatch")
    bracket = 0.5 * (np.outer(g.a, h.a) - np.outer(h.a, g.a))
    return Step2GroupElement(g.a + h.a, g.area + h.area + bracket)


def group_inverse(g: Step2GroupElement) -> Step2GroupElement:
    return Step2GroupElement(-g.a, -g.area)


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Vertices sampled at strictly increasing times."""

    vertices: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        t = np.asarray(self.times, dtype=float)
        if v.shape[0] != t.size or v.shape[0] < 2:
            raise ValueError("need at least two vertices with matching times")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "times", t)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation inside the time domain."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"time {t} outside path domain")
        out = np.empty(self.dim)
        for k in range(self.dim):
            out[k] = np.interp(t, self.times, self.vertices[:, k])
        return out


def signature_level2(p: PiecewiseLinearPath, s: float, t: float) -> Step2GroupElement:
    """Level-2 signature of the path over [s, t] via Chen multiplication.

    Each linear segment contributes (increment, 0); concatenation through the
    group law accumulates the Levy area, so the Chen identity
    sig(s,u) * sig(u,t) = sig(s,t) holds exactly.
    """
    if s >= t:
        raise ValueError("need s < t")
    knots = [s] + [float(u) for u in p.times if s < u < t] + [t]
    sig = group_identity(p.dim)
    for u0, u1 in zip(knots, knots[1:]):
        inc = p.at(u1) - p.at(u0)
        sig = group_multiply(sig, Step2GroupElement(inc, np.zeros((p.dim, p.dim))))
    return sig


def tangent_distance(g: Step2GroupElement, h: Step2GroupElement) -> float:
    """Euclidean norm of log-coordinate differences (flat tangent metric)."""
    if g.dim != h.dim:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(g.flat() - h.flat()))


def cc_homogeneous_norm(g: Step2GroupElement) -> float:
    """Ball-box homogeneous norm ||a|| + ||A||_F^(1/2).

    Equivalent to (not equal to) the Carnot-Caratheodory norm and exactly
    homogeneous under the dilation (a, A) -> (lam a, lam^2 A).
    """
    return float(np.linalg.norm(g.a) + math.sqrt(np.linalg.norm(g.area, "fro")))


def carnot_dilation(g: Step2GroupElement, lam: float) -> Step2GroupElement:
    return Step2GroupElement(lam * g.a, lam * lam * g.area)


class TangentCarrier:
    """Measure carrier for step-2 elements under the flat tangent metric."""

    def distance(self, g: Step2GroupElement, h: Step2GroupElement) -> float:
        return tangent_distance(g, h)

    def atom_key(self, g: Step2GroupElement):
        return tuple(g.flat().tolist())


def _rk4_run(
    vector_field: Callable[[np.ndarray], np.ndarray],
    driver: PiecewiseLinearPath,
    y0: np.ndarray,
    n_steps: int,
    blowup_cap: float,
) -> np.ndarray:
    t0, t1 = float(driver.times[0]), float(driver.times[-1])
    ts = np.linspace(t0, t1, n_steps + 1)
    # include the driver's own knots so each RK4 step sees a smooth segment
    ts = np.unique(np.concatenate([ts, driver.times]))
    y = np.asarray(y0, dtype=float).copy()
    for a, b in zip(ts, ts[1:]):
        h = b - a
        xdot = (driver.at(b) - driver.at(a)) / h

        def rhs(state: np.ndarray) -> np.ndarray:
            return np.asarray(vector_field(state), dtype=float) @ xdot

        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > blowup_cap:
            raise ArithmeticError(f"flow diverged (|y| > {blowup_cap}) at t={b}")
    return y


def rde_flow_oracle(
    vector_field: Callable[[np.ndarray], np.ndarray],
    driver: PiecewiseLinearPath,
    y0: np.ndarray,
    step: float = 1e-2,
    tol: float = 1e-8,
    blowup_cap: float = 1e8,
) -> tuple[np.ndarray, float]:
    """Integrate dy = V(y) dx along a piecewise-linear driver with RK4.

    ``vector_field(y)`` returns the (e, d) matrix V(y) acting on the driver's
    increments.  The step is halved until two successive runs agree within
    ``tol``; returns (terminal state, Richardson error estimate).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    span = float(driver.times[-1] - driver.times[0])
    n = max(2, int(math.ceil(span / step)))
    prev = _rk4_run(vector_field, driver, y0, n, blowup_cap)
    for _ in range(20):
        n *= 2
        cur = _rk4_run(vector_field, driver, y0, n, blowup_cap)
        err = float(np.linalg.norm(cur - prev))
        if err <= tol:
            # one more Richardson refinement: RK4 error ~ h^4
            return cur + (cur - prev) / 15.0, err / 15.0
        prev = cur
    raise ArithmeticError(f"RK4 failed to reach tolerance {tol}; last delta {err}")
