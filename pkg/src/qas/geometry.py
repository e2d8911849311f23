"""QAS structures for the concrete target geometries.

Each geometry bundles a mixing function (with its approximate-simplex
constants), a quantization family, and, when the space is barycentric, a
barycenter map:

* Euclidean R^d with the l2 or l1 norm: mixing and barycenter are weighted
  averages, quantization is the identity chart.
* SPD matrices with the affine-invariant metric: the two-point mixing is the
  weighted geometric mean; for more points it is the Karcher barycenter of
  the weighted atoms, computed by the fixed-point iteration.
* Wasserstein space over a finite base: mixing is the convex combination of
  measures, quantization places mass on a dense sequence (the base points in
  index order).
* The circle split into closed arcs: per-arc mixing via the angle chart and a
  two-endpoint quantization; this is the quantized geodesic partition used by
  the structured pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, PartError, SpectralError
from .measure import DiscreteMeasure, dirac, mix_wasserstein, quantize_measure, w1_discrete

__all__ = [
    "QasStructure",
    "SpdMatrix",
    "GeodesicPartition",
    "check_mixing_inequality",
    "barycenter_euclidean",
    "spd_distance",
    "spd_geodesic",
    "karcher_barycenter",
    "euclidean_qas",
    "spd_qas",
    "wasserstein_qas",
    "circle_partition",
    "trivial_partition",
    "Arc",
    "WholeSpacePart",
    "contract_part",
    "separation_lower_bound",
    "separation_inverse",
    "CircleCarrier",
    "SpdCarrier",
]

EIG_FLOOR = 1e-12
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# generic structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QasStructure:
    """A mixing function with constants, a quantization family, and an
    optional barycenter map, over a carrier with ``distance``.

    ``quantization(q)`` returns ``(D_q, Q_q)`` where ``Q_q`` maps R^{D_q}
    into the space.  ``mixing(w, points)`` must satisfy
    d(mixing(w, y), y_i) <= c_eta * (sum_j d(y_i, y_j)^p w_j)^{1/p}.
    """

    name: str
    space: object
    mixing: Callable[[np.ndarray, Sequence], object]
    c_eta: float = 1.0
    p: int = 1
    quantization: Callable[[int], tuple[int, Callable[[np.ndarray], object]]] | None = None
    barycenter: Callable[[DiscreteMeasure], object] | None = None

    def distance(self, a, b) -> float:
        return self.space.distance(a, b)


def check_mixing_inequality(
    q: QasStructure, w: np.ndarray, points: Sequence, i: int, tol: float = 1e-9
) -> tuple[float, float, bool]:
    """Evaluate both sides of the approximate-simplex inequality at vertex i."""
    w = np.asarray(w, dtype=float)
    if w.size != len(points):
        raise ValueError("weight length must match the number of points")
    if not (0 <= i < len(points)):
        raise IndexError(f"vertex index {i} out of range")
    mixed = q.mixing(w, points)
    lhs = q.distance(mixed, points[i])
    rhs = q.c_eta * float(
        sum(wj * q.distance(points[i], yj) ** q.p for wj, yj in zip(w, points))
    ) ** (1.0 / q.p)
    return lhs, rhs, lhs <= rhs + tol


def barycenter_euclidean(mu: DiscreteMeasure) -> np.ndarray:
    """Bochner mean of a measure whose atoms are coordinate vectors."""
    try:
        pts = np.array([np.asarray(a, dtype=float) for a in mu.atoms])
    except (TypeError, ValueError) as exc:
        raise TypeError("atoms must carry coordinates") from exc
    return mu.weights @ pts


# ---------------------------------------------------------------------------
# SPD matrices, affine-invariant geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive definite matrix (eigenvalues > 1e-12)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SpectralError(f"expected a square matrix, got shape {a.shape}")
        if np.max(np.abs(a - a.T)) > 1e-10:
            raise SpectralError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        w = np.linalg.eigvalsh(a)
        if w.min() <= EIG_FLOOR:
            raise SpectralError(f"matrix not positive definite: eigenvalue {w.min():.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> str:
        import json

        return json.dumps(self.entries.ravel().tolist())

    @classmethod
    def from_json(cls, text: str) -> "SpdMatrix":
        import json

        flat = np.asarray(json.loads(text), dtype=float)
        d = int(round(math.sqrt(flat.size)))
        return cls(flat.reshape(d, d))


def _sym_apply(a: np.ndarray, fn) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (a + a.T))
    return (u * fn(w)) @ u.T


def _spd_guard(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (a + a.T))
    if w.min() <= EIG_FLOOR:
        raise SpectralError(f"{what}: eigenvalue {w.min():.3e} below floor")
    return 0.5 * (a + a.T)


def _as_array(a) -> np.ndarray:
    return a.entries if isinstance(a, SpdMatrix) else np.asarray(a, dtype=float)


def spd_distance(a, b) -> float:
    """Affine-invariant distance ||log(A^-1/2 B A^-1/2)||_F."""
    am = _spd_guard(_as_array(a), "first argument")
    bm = _spd_guard(_as_array(b), "second argument")
    if am.shape != bm.shape:
        raise ValueError("dimension mismatch")
    isq = _sym_apply(am, lambda w: w**-0.5)
    inner = _sym_apply(isq @ bm @ isq, np.log)
    return float(np.linalg.norm(inner, "fro"))


def spd_geodesic(w: np.ndarray, a, b) -> SpdMatrix:
    """Weighted geometric mean A^1/2 (A^-1/2 B A^-1/2)^{w_1} A^1/2.

    The exponent is the *first* weight, so w = (1, 0) returns B and
    w = (0, 1) returns A.
    """
    w = np.asarray(w, dtype=float)
    if w.size != 2 or abs(w.sum() - 1.0) > 1e-9 or np.any(w < -1e-12):
        raise ValueError("w must lie on the 2-simplex")
    am = _spd_guard(_as_array(a), "first endpoint")
    bm = _spd_guard(_as_array(b), "second endpoint")
    sq = _sym_apply(am, np.sqrt)
    isq = _sym_apply(am, lambda v: v**-0.5)
    inner = _sym_apply(isq @ bm @ isq, lambda v: v ** w[0])
    return SpdMatrix(sq @ inner @ sq)


def karcher_barycenter(
    mu: DiscreteMeasure, tol: float = 1e-8, max_iter: int = 200
) -> SpdMatrix:
    """Karcher (Frechet) barycenter of an SPD-atom measure.

    Iterates S <- S^1/2 exp(step * sum_k w_k log(S^-1/2 A_k S^-1/2)) S^1/2
    with unit step, halving on residual increase, until the Karcher residual
    ||sum_k w_k log(S^-1/2 A_k S^-1/2)||_F falls below ``tol``.
    """
    mats = [_spd_guard(_as_array(a), f"atom {k}") for k, a in enumerate(mu.atoms)]
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValueError("atoms must share one dimension")
    weights = mu.weights
    cur = sum(wk * mk for wk, mk in zip(weights, mats))

    def residual_at(s: np.ndarray) -> np.ndarray:
        isq = _sym_apply(s, lambda v: v**-0.5)
        return sum(
            wk * _sym_apply(isq @ mk @ isq, np.log) for wk, mk in zip(weights, mats)
        )

    res = residual_at(cur)
    res_norm = float(np.linalg.norm(res, "fro"))
    for _ in range(max_iter):
        if res_norm <= tol:
            return SpdMatrix(cur)
        sq = _sym_apply(cur, np.sqrt)
        step = 1.0
        for _ in range(40):
            cand = sq @ _sym_apply(step * res, np.exp) @ sq
            cand_res = residual_at(cand)
            cand_norm = float(np.linalg.norm(cand_res, "fro"))
            if cand_norm < res_norm or cand_norm <= tol:
                cur, res, res_norm = cand, cand_res, cand_norm
                break
            step *= 0.5
        else:
            raise ConvergenceError(
                f"step halving stalled at residual {res_norm:.3e}", residual=res_norm
            )
    if res_norm <= tol:
        return SpdMatrix(cur)
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations, residual {res_norm:.3e}",
        residual=res_norm,
    )


class SpdCarrier:
    """Measure carrier whose points are SPD matrices."""

    def __init__(self, dim: int):
        self.dim = dim

    def distance(self, a, b) -> float:
        return spd_distance(a, b)

    def atom_key(self, a):
        return tuple(_as_array(a).ravel().tolist())


def _sym_from_vec(z: np.ndarray, d: int) -> np.ndarray:
    m = np.zeros((d, d))
    iu = np.triu_indices(d)
    m[iu] = z
    return m + np.triu(m, k=1).T


# ---------------------------------------------------------------------------
# registered structures
# ---------------------------------------------------------------------------

def euclidean_qas(dim: int, norm: str = "l2") -> QasStructure:
    """R^dim as a barycentric QAS space; mixing is the weighted average."""
    from .measure import EuclideanCarrier

    carrier = EuclideanCarrier(dim, norm=norm)

    def mixing(w, points):
        w = np.asarray(w, dtype=float)
        return w @ np.array([np.asarray(p, dtype=float) for p in points])

    def quantization(q: int):
        return dim, lambda z: np.asarray(z, dtype=float)[:dim]

    return QasStructure(
        name=f"euclidean-{norm}",
        space=carrier,
        mixing=mixing,
        c_eta=1.0,
        p=1,
        quantization=quantization,
        barycenter=barycenter_euclidean,
    )


def spd_qas(dim: int) -> QasStructure:
    """SPD_dim with the affine-invariant metric; mixing via Karcher barycenter."""
    carrier = SpdCarrier(dim)

    def mixing(w, points):
        w = np.asarray(w, dtype=float)
        if len(points) == 2:
            # geodesic convention: exponent on the B-side term is w_1
            return spd_geodesic(np.array([w[1], w[0]]), points[0], points[1])
        keep = w > 0
        atoms = tuple(p for p, k in zip(points, keep) if k)
        mu = DiscreteMeasure(carrier, atoms, w[keep] / w[keep].sum())
        return karcher_barycenter(mu, tol=1e-10)

    def quantization(q: int):
        d_q = dim * (dim + 1) // 2

        def q_map(z):
            return SpdMatrix(_sym_apply(_sym_from_vec(np.asarray(z, float), dim), np.exp))

        return d_q, q_map

    return QasStructure(
        name=f"spd-{dim}",
        space=carrier,
        mixing=mixing,
        c_eta=1.0,
        p=1,
        quantization=quantization,
        barycenter=lambda mu: karcher_barycenter(mu, tol=1e-10),
    )


def wasserstein_qas(base: object, dense_seq: Sequence | None = None) -> QasStructure:
    """P1 over a base carrier; points of this structure are DiscreteMeasures."""

    class _W1Carrier:
        def distance(self, a: DiscreteMeasure, b: DiscreteMeasure) -> float:
            return w1_discrete(a, b)

        def atom_key(self, a: DiscreteMeasure):
            items = sorted(
                (str(k), w)
                for k, w in zip(
                    (getattr(base, "atom_key", lambda x: x)(x) for x in a.atoms),
                    a.weights,
                )
            )
            return tuple(items)

    carrier = _W1Carrier()
    seq = dense_seq
    if seq is None and hasattr(base, "n_points"):
        seq = list(range(base.n_points))

    def mixing(w, points):
        return mix_wasserstein(w, points)

    def quantization(q: int):
        if seq is None:
            raise ValueError("a dense sequence is required to quantize measures")

        def q_map(z):
            z = np.asarray(z, dtype=float)
            u, zz = z[:q], z[q : 2 * q]
            return quantize_measure(u, zz, base, seq)

        return 2 * q, q_map

    return QasStructure(
        name="wasserstein",
        space=carrier,
        mixing=mixing,
        c_eta=1.0,
        p=1,
        quantization=quantization,
        barycenter=None,
    )


# ---------------------------------------------------------------------------
# circle arcs and quantized geodesic partitions
# ---------------------------------------------------------------------------

class CircleCarrier:
    """Angles in [0, 2pi) with the wraparound metric."""

    def distance(self, a: float, b: float) -> float:
        gap = abs((float(a) - float(b)) % TWO_PI)
        return min(gap, TWO_PI - gap)

    def atom_key(self, a) -> float:
        return float(a) % TWO_PI


@dataclass(frozen=True)
class Arc:
    """Closed arc [start, start + length] on the circle (length <= pi)."""

    start: float
    length: float

    def contains(self, theta: float, tol: float = 1e-9) -> bool:
        return ((float(theta) - self.start) % TWO_PI) <= self.length + tol

    def distance_to(self, carrier: "CircleCarrier", theta: float) -> float:
        """Wraparound distance from an angle to the closed arc."""
        if self.contains(theta):
            return 0.0
        return min(
            carrier.distance(theta, self.start),
            carrier.distance(theta, self.start + self.length),
        )

    def chart(self, theta: float) -> float:
        """Lift an arc point to the real chart [start, start + length]."""
        if not self.contains(theta):
            raise PartError(f"angle {theta} outside arc [{self.start}, {self.start + self.length}]")
        return self.start + ((float(theta) - self.start) % TWO_PI)

    def unchart(self, t: float) -> float:
        return float(t) % TWO_PI

    @property
    def midpoint(self) -> float:
        return self.unchart(self.start + 0.5 * self.length)


@dataclass(frozen=True)
class GeodesicPartition:
    """Cover of a QAS space by eta-convex pointed parts with separation rate S.

    ``parts`` holds part descriptors with a membership test, ``refs`` their
    reference points, ``structures`` a per-part QasStructure (mixing restricted
    to the part), and ``separation`` a monotone decreasing S with S(1) = 0
    bounding the gap of the delta-contracted parts from below.
    """

    space: object
    parts: tuple
    refs: tuple
    structures: tuple
    separation: Callable[[float], float]
    meta: dict = field(default_factory=dict)

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def member(self, m: int, point) -> bool:
        return self.parts[m].contains(point)

    def membership(self, point) -> list[int]:
        return [m for m in range(self.n_parts) if self.member(m, point)]


def contract_part(partition: GeodesicPartition, m: int, delta: float, point):
    """Pull a point of part m towards the reference point: eta((1-delta, delta), (ref, point))."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    if not partition.member(m, point):
        raise PartError(f"point {point} outside part {m}")
    eta = partition.structures[m].mixing
    return eta(np.array([1.0 - delta, delta]), (partition.refs[m], point))


def separation_lower_bound(partition: GeodesicPartition, delta: float) -> float:
    """S(delta): guaranteed gap between distinct delta-contracted parts."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError("delta must lie in [0, 1]")
    return float(partition.separation(delta))


def separation_inverse(partition: GeodesicPartition, t: float) -> float:
    """Generalized inverse S^dagger(t) = inf{delta : S(delta) <= t} by bisection."""
    s = partition.separation
    if s(0.0) <= t:
        return 0.0
    lo, hi = 0.0, 1.0  # S(lo) > t >= S(hi) = 0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if s(mid) <= t:
            hi = mid
        else:
            lo = mid
    return hi


class WholeSpacePart:
    """Degenerate part descriptor containing every point."""

    def contains(self, point, tol: float = 0.0) -> bool:
        return True

    def distance_to(self, carrier, point) -> float:
        return 0.0


def trivial_partition(structure: QasStructure, ref) -> GeodesicPartition:
    """Single-part partition {(Y, ref)} with separation rate identically zero."""
    return GeodesicPartition(
        space=structure.space,
        parts=(WholeSpacePart(),),
        refs=(ref,),
        structures=(structure,),
        separation=lambda delta: 0.0,
        meta={"kind": "trivial"},
    )


def circle_partition(m_arcs: int) -> GeodesicPartition:
    """The circle split into m_arcs equal closed arcs sharing endpoints.

    Adjacent arcs intersect only at shared endpoints; the per-arc mixing is
    the angular average in the arc chart and the quantization maps R^2
    through the 2-simplex to convex combinations of the arc endpoints.
    The separation rate is exact: S(delta) = (1 - delta) * 2pi / m_arcs.
    """
    if m_arcs < 3:
        raise ValueError("need at least 3 arcs")
    carrier = CircleCarrier()
    length = TWO_PI / m_arcs
    arcs = tuple(Arc(start=k * length, length=length) for k in range(m_arcs))

    def make_structure(arc: Arc) -> QasStructure:
        def mixing(w, points):
            w = np.asarray(w, dtype=float)
            lifted = np.array([arc.chart(p) for p in points])
            return arc.unchart(float(w @ lifted))

        def quantization(q: int):
            from .numerics import project_simplex

            def q_map(z):
                probs = project_simplex(np.asarray(z, dtype=float)[:2])
                return arc.unchart(probs[0] * arc.start + probs[1] * (arc.start + arc.length))

            return 2, q_map

        def barycenter(mu: DiscreteMeasure):
            return mixing(mu.weights, mu.atoms)

        return QasStructure(
            name="circle-arc",
            space=carrier,
            mixing=mixing,
            c_eta=1.0,
            p=1,
            quantization=quantization,
            barycenter=barycenter,
        )

    def separation(delta: float) -> float:
        return (1.0 - delta) * length

    return GeodesicPartition(
        space=carrier,
        parts=arcs,
        refs=tuple(a.midpoint for a in arcs),
        structures=tuple(make_structure(a) for a in arcs),
        separation=separation,
        meta={"kind": "circle", "m_arcs": m_arcs},
    )
