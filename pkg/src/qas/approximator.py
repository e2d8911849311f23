"""Measure-valued universal approximators and their training pipelines.

Three pipelines share the same skeleton (compressed feature map, ReLU core,
simplex projection, quantized-mixing head):

* ``build_unstructured``: one global model whose output measure places mass
  on a dense sequence of target points.
* ``derandomize``: post-composition with a barycenter map, collapsing the
  output measure to a target point; for Euclidean targets this equals the
  attention-layer expansion over the value matrix.
* ``build_structured``: per-part sub-models glued by a distance-ratio
  partition of unity on the source and an indicator-threshold part
  classifier on the target; evaluation reports the certified set.

The ReLU nets are trained with seeded random hidden features and a
ridge-regressed output layer by default (gradient descent is available);
existence proofs do not train, so the procedure here is the artifact's own.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PartError
from .feature import FeatureMap, fourier_feature_map, kuratowski_embed
from .geometry import GeodesicPartition, separation_inverse
from .measure import (
    DiscreteMeasure,
    EuclideanCarrier,
    quantized_mixing_wasserstein,
    w1_to_dirac,
)
from .metric import FiniteMetricSpace
from .numerics import project_simplex, softmax
from .rng import rng_from_seed

__all__ = [
    "ReluNet",
    "relu_forward",
    "fit_universal",
    "FitResult",
    "k_medoids",
    "RandomizedApproximator",
    "build_unstructured",
    "evaluate",
    "derandomize",
    "FeatureDecomposition",
    "PartitionOfUnity",
    "partition_weights",
    "ClassifierResult",
    "part_classifier",
    "build_structured",
    "StructuredReport",
    "model_to_dict",
    "model_from_dict",
]


# ---------------------------------------------------------------------------
# ReLU networks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReluNet:
    """Affine layers with ReLU between them (none after the last).

    ``weights[t]`` has shape (d_{t+1}, d_t); hidden widths never exceed
    ``capacity``.
    """

    weights: tuple
    biases: tuple
    capacity: int

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise ValueError("need matching, nonempty weight/bias tuples")
        for t, (w, b) in enumerate(zip(ws, bs)):
            if w.shape[0] != b.size:
                raise ValueError(f"layer {t}: weight rows {w.shape[0]} != bias size {b.size}")
            if t > 0 and w.shape[1] != ws[t - 1].shape[0]:
                raise ValueError(f"layer {t}: input dim mismatch")
        hidden = [w.shape[0] for w in ws[:-1]]
        if hidden and max(hidden) > max(self.capacity, 1):
            raise ValueError(f"hidden width {max(hidden)} exceeds capacity {self.capacity}")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def n_params(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))


def relu_forward(net: ReluNet, x: np.ndarray) -> np.ndarray:
    """Forward pass; accepts a single vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != net.in_dim:
        raise ValueError(f"input dim {h.shape[1]} != net input {net.in_dim}")
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
    h = h @ net.weights[-1].T + net.biases[-1]
    return h[0] if single else h


@dataclass(frozen=True)
class FitResult:
    net: ReluNet
    max_error: float
    fallback: bool
    method: str


def fit_universal(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    capacity: int,
    seed: int,
    method: str = "ridge",
    ridge_lambda: float = 1e-12,
    gd_steps: int = 3000,
) -> FitResult:
    """Fit a ReLU net to training pairs; deterministic given the seed.

    ``ridge`` draws ``capacity`` random hidden features (hinges anchored at
    training points) and solves the output layer by ridge least squares with
    an unpenalized bias.  ``gd`` refines both layers by full-batch gradient
    descent with a fixed step schedule.
    """
    if not pairs:
        raise ValueError("need at least one training pair")
    xs = np.array([np.asarray(p[0], dtype=float) for p in pairs])
    ys = np.array([np.atleast_1d(np.asarray(p[1], dtype=float)) for p in pairs])
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("training data must be finite")
    n, d_in = xs.shape
    d_out = ys.shape[1]
    rng = rng_from_seed(seed)

    if capacity <= 0:
        aug = np.hstack([xs, np.ones((n, 1))])
        sol, *_ = np.linalg.lstsq(aug, ys, rcond=None)
        net = ReluNet((sol[:-1].T,), (sol[-1],), capacity=0)
        err = _max_row_error(relu_forward(net, xs), ys)
        return FitResult(net, err, fallback=False, method="ridge")

    a0 = rng.standard_normal((capacity, d_in)) / math.sqrt(max(d_in, 1))
    anchor = xs[rng.integers(0, n, size=capacity)]
    b0 = -np.einsum("ij,ij->i", a0, anchor)
    feats = np.maximum(xs @ a0.T + b0, 0.0)
    aug = np.hstack([feats, np.ones((n, 1))])

    penalty = math.sqrt(ridge_lambda) * np.eye(capacity + 1)
    penalty[-1, -1] = 0.0  # bias unpenalized so constant targets fit exactly
    stacked = np.vstack([aug, penalty])
    rhs = np.vstack([ys, np.zeros((capacity + 1, d_out))])
    sol, _, rank, _ = np.linalg.lstsq(stacked, rhs, rcond=None)
    fallback = rank < capacity + 1
    w1, b1 = sol[:-1].T, sol[-1]

    if method == "gd":
        w1, b1, a0, b0 = _gradient_descent(xs, ys, a0, b0, w1, b1, gd_steps)
    elif method != "ridge":
        raise ValueError(f"unknown fit method {method!r}")

    net = ReluNet((a0, w1), (b0, b1), capacity=capacity)
    err = _max_row_error(relu_forward(net, xs), ys)
    return FitResult(net, err, fallback=fallback, method=method)


def _max_row_error(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.linalg.norm(pred - target, axis=1).max())


def _gradient_descent(xs, ys, a0, b0, w1, b1, steps):
    n = xs.shape[0]
    lr0 = 0.05
    for step in range(steps):
        lr = lr0 / (1.0 + step / 500.0)
        h = xs @ a0.T + b0
        act = np.maximum(h, 0.0)
        pred = act @ w1.T + b1
        grad_out = 2.0 * (pred - ys) / n
        gw1 = grad_out.T @ act
        gb1 = grad_out.sum(axis=0)
        gact = grad_out @ w1
        gh = gact * (h > 0)
        ga0 = gh.T @ xs
        gb0 = gh.sum(axis=0)
        w1 -= lr * gw1
        b1 -= lr * gb1
        a0 -= lr * ga0
        b0 -= lr * gb0
    return w1, b1, a0, b0


def k_medoids(dist: np.ndarray, k: int, seed: int, max_iter: int = 50) -> list[int]:
    """Seeded k-medoids on a precomputed distance matrix; returns sorted indices."""
    n = dist.shape[0]
    if k >= n:
        return list(range(n))
    rng = rng_from_seed(seed, stream=7)
    medoids = sorted(rng.choice(n, size=k, replace=False).tolist())
    for _ in range(max_iter):
        assign = np.argmin(dist[:, medoids], axis=1)
        new = []
        for c in range(k):
            members = np.where(assign == c)[0]
            if members.size == 0:
                new.append(medoids[c])
                continue
            costs = dist[np.ix_(members, members)].sum(axis=1)
            new.append(int(members[np.argmin(costs)]))
        new = sorted(set(new))
        while len(new) < k:  # collapsed clusters: refill with farthest points
            far = int(np.argmax(np.min(dist[:, new], axis=1)))
            new = sorted(set(new + [far]))
        if new == medoids:
            break
        medoids = new
    return medoids


# ---------------------------------------------------------------------------
# unstructured / barycentric models
# ---------------------------------------------------------------------------

@dataclass
class RandomizedApproximator:
    """Trained pipeline producing discrete measures over the target."""

    mode: str
    feature: FeatureMap
    core: ReluNet
    head_u: np.ndarray
    head_z: np.ndarray
    dense_seq: tuple
    target_space: object
    target_barycenter: Callable[[DiscreteMeasure], object] | None = None
    use_softmax: bool = False
    achieved_error: float = math.nan
    target_eps: float = math.nan
    met_target: bool = True
    seed: int = 0
    structured: "StructuredParts | None" = None
    report: dict = field(default_factory=dict)

    def n_params(self) -> int:
        total = self.core.n_params() + self.head_u.size + self.head_z.size
        if self.structured is not None:
            for row in self.structured.sub_models:
                for sm in row:
                    total += sm.net.n_params() + len(sm.anchors)
            for clf in self.structured.classifiers:
                for reg in clf.regressors:
                    total += reg.net.n_params() + len(reg.atoms)
        return total


def _head_weights(model: RandomizedApproximator, x) -> np.ndarray:
    raw = relu_forward(model.core, model.feature(x))
    return softmax(raw) if model.use_softmax else project_simplex(raw)


def evaluate(model: RandomizedApproximator, x) -> DiscreteMeasure:
    """The output measure at x; weights always form an exact simplex vector."""
    if model.mode == "structured":
        return evaluate_structured(model, x)[0]
    w = _head_weights(model, x)
    params = [(model.head_u[i], model.head_z[i]) for i in range(w.size)]
    return quantized_mixing_wasserstein(w, params, model.target_space, model.dense_seq)


def derandomize(
    model: RandomizedApproximator, x, barycenter: Callable | None = None
):
    """Collapse the output measure through the barycenter map."""
    if model.mode == "structured":
        return derandomize_structured(model, x)
    beta = barycenter or model.target_barycenter
    if beta is None:
        raise ValueError("target has no barycenter map")
    return beta(evaluate(model, x))


def value_matrix(model: RandomizedApproximator) -> np.ndarray:
    """Rows V_n = sum_q [P(u^n)]_q y_(ceil z^n_q) for Euclidean targets."""
    if not isinstance(model.target_space, EuclideanCarrier):
        raise ValueError("value matrix requires a Euclidean target")
    from .numerics import ceil_index

    rows = []
    for u, z in zip(model.head_u, model.head_z):
        probs = project_simplex(u)
        pts = np.array(
            [np.asarray(model.dense_seq[ceil_index(zq, len(model.dense_seq)) - 1], float) for zq in z]
        )
        rows.append(probs @ pts)
    return np.array(rows)


def build_unstructured(
    train_inputs: Sequence,
    f: Callable,
    feature: FeatureMap,
    target_space,
    eps: float,
    n_atoms: int,
    capacity: int,
    seed: int,
    q_slots: int = 1,
    dense_seq: Sequence | None = None,
    target_barycenter: Callable | None = None,
    method: str = "ridge",
    use_softmax: bool = False,
    capacity_sweep: Sequence[int] | None = None,
    atoms: Sequence | None = None,
    target_weights: Callable | None = None,
) -> RandomizedApproximator:
    """Fit the global measure-valued model on the training set.

    Head atoms default to the dense-sequence points nearest f's sampled range
    (seeded k-medoids) with one-hot training targets; callers may instead fix
    ``atoms`` explicitly and supply ``target_weights(y) -> simplex vector``
    (e.g. barycentric frame coordinates for Euclidean targets).  u blocks
    start at vertex one-hots.  If the budget cannot reach ``eps`` the best
    model is returned with ``met_target`` False.
    """
    train_inputs = list(train_inputs)
    targets = [f(x) for x in train_inputs]
    if dense_seq is None:
        if isinstance(target_space, FiniteMetricSpace):
            dense_seq = list(range(target_space.n_points))
        elif atoms is not None:
            dense_seq = list(atoms)
        else:
            dense_seq = _distinct(target_space, targets)
    dense_seq = list(dense_seq)

    key = getattr(target_space, "atom_key", lambda v: v)
    seq_pos = {key(y): i for i, y in enumerate(dense_seq)}
    if atoms is None:
        distinct = _distinct(target_space, targets)
        dd = np.array(
            [[target_space.distance(a, b) for b in distinct] for a in distinct]
        )
        med_idx = k_medoids(dd, min(n_atoms, len(distinct)), seed)
        medoids = [distinct[i] for i in med_idx]
    else:
        medoids = list(atoms)
    n_eff = len(medoids)

    positions = []
    for mpt in medoids:
        if key(mpt) not in seq_pos:
            raise ValueError("head atom missing from the dense sequence")
        positions.append(seq_pos[key(mpt)])
    head_u = np.zeros((n_eff, q_slots))
    head_u[:, 0] = 2.0  # projects to the first vertex of the Q-simplex
    head_z = np.array([[pos + 1.0] * q_slots for pos in positions])

    feats = [feature(x) for x in train_inputs]
    if target_weights is None:
        def target_weights(y):
            dists = [target_space.distance(y, mpt) for mpt in medoids]
            t = np.zeros(n_eff)
            t[int(np.argmin(dists))] = 1.0
            return t

    pairs = [(fx, np.asarray(target_weights(y), dtype=float)) for fx, y in zip(feats, targets)]

    caps = list(capacity_sweep) if capacity_sweep else [capacity]
    best = None
    for c in caps:
        fit = fit_universal(pairs, c, seed, method=method)
        model = RandomizedApproximator(
            mode="barycentric" if (target_barycenter is not None) else "unstructured",
            feature=feature,
            core=fit.net,
            head_u=head_u,
            head_z=head_z,
            dense_seq=tuple(dense_seq),
            target_space=target_space,
            target_barycenter=target_barycenter,
            use_softmax=use_softmax,
            target_eps=eps,
            seed=seed,
        )
        err = max(
            w1_to_dirac(evaluate(model, x), y) for x, y in zip(train_inputs, targets)
        )
        model.achieved_error = err
        model.met_target = err < eps
        model.report = {"fit_max_error": fit.max_error, "fit_fallback": fit.fallback,
                        "capacity": c, "n_atoms": n_eff}
        if best is None or err < best.achieved_error:
            best = model
        if model.met_target:
            return model
    return best


def _distinct(space, points) -> list:
    key = getattr(space, "atom_key", lambda v: v)
    seen: dict = {}
    for p in points:
        seen.setdefault(key(p), p)
    return list(seen.values())


# ---------------------------------------------------------------------------
# partitions of the source
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureDecomposition:
    """Closed parts of a finite source space with one feature map per part."""

    space: FiniteMetricSpace
    parts: tuple  # tuple of index tuples
    features: tuple  # one FeatureMap per part

    def __post_init__(self):
        if len(self.parts) != len(self.features) or not self.parts:
            raise ValueError("need one feature map per part")
        covered = set()
        for p in self.parts:
            covered.update(int(i) for i in p)
        if covered != set(range(self.space.n_points)):
            raise ValueError("parts must cover the space")

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def part_diameters(self) -> list[float]:
        out = []
        for p in self.parts:
            idx = np.asarray(p, dtype=int)
            out.append(float(self.space.dist[np.ix_(idx, idx)].max()) if idx.size > 1 else 0.0)
        return out


@dataclass(frozen=True)
class PartitionOfUnity:
    """Distance-ratio weights over closed parts of a finite space."""

    space: FiniteMetricSpace
    parts: tuple

    def dist_to_complement(self, x: int, i: int) -> float:
        comp = [j for j in range(self.space.n_points) if j not in set(self.parts[i])]
        if not comp:
            return math.inf
        return float(self.space.dist[x, comp].min())

    def boundary(self, i: int) -> list[int]:
        """Points of part i shared with any other part."""
        others = set()
        for m, p in enumerate(self.parts):
            if m != i:
                others.update(p)
        return [j for j in self.parts[i] if j in others]

    def dist_to_boundary(self, x: int, i: int) -> float:
        bd = self.boundary(i)
        if not bd:
            return math.inf
        return float(self.space.dist[x, bd].min())


def partition_weights(
    p: PartitionOfUnity, x: int, n_active: int, r: float
) -> tuple[np.ndarray | None, bool]:
    """Weights psi_n(x) = d(x, X_n^c) / sum_i d(x, X_i^c) and the good-set flag.

    The flag is True when x sits inside some active part at distance > r from
    that part's shared boundary.  Off the good set the denominator may vanish;
    weights are then None rather than an exception.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    n_active = min(n_active, len(p.parts))
    dists = np.array([p.dist_to_complement(x, i) for i in range(n_active)])
    good = any(
        x in set(p.parts[i]) and p.dist_to_boundary(x, i) > r for i in range(n_active)
    )
    if np.any(np.isinf(dists)):
        psi = np.zeros(n_active)
        psi[int(np.argmax(np.isinf(dists)))] = 1.0
        return psi, good
    denom = dists.sum()
    if denom <= 0.0:
        return None, False
    return dists / denom, good


# ---------------------------------------------------------------------------
# structured models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalModel:
    """Deterministic per-(source part, target part) approximant.

    Evaluates eta^m(P_simplex(net(phi_n(x))), anchors): a point of the target
    part, never a measure.
    """

    net: ReluNet
    feature: FeatureMap
    anchors: tuple
    mixing: Callable

    def __call__(self, x):
        w = project_simplex(relu_forward(self.net, self.feature(x)))
        if len(self.anchors) == 1:
            return self.anchors[0]
        return self.mixing(w, self.anchors)


@dataclass(frozen=True)
class ScalarRegressor:
    """Quantized-mixing regressor into ([0, inf), |.|): sum_i [P(g(x))]_i |z_i|."""

    net: ReluNet
    feature: FeatureMap
    atoms: np.ndarray

    def __call__(self, x) -> float:
        w = project_simplex(relu_forward(self.net, self.feature(x)))
        return float(w @ np.abs(self.atoms))


@dataclass(frozen=True)
class PartClassifierModel:
    """One approximate distance-to-part map built from per-part regressors."""

    regressors: tuple  # one ScalarRegressor per source part

    def value(self, psi: np.ndarray, x) -> float:
        return float(sum(pn * reg(x) for pn, reg in zip(psi, self.regressors)))


@dataclass
class StructuredParts:
    decomposition: FeatureDecomposition
    partition_y: GeodesicPartition
    pou: PartitionOfUnity
    sub_models: tuple  # [n][m] -> LocalModel
    classifiers: tuple  # [m] -> PartClassifierModel
    threshold: float
    eps_a: float
    eps_q: float
    eps_e: float
    delta_star: float
    good_radius: float
    tie_count: int = 0
    abstention_count: int = 0


@dataclass(frozen=True)
class ClassifierResult:
    weights: np.ndarray | None
    certified: bool
    chosen: int | None
    tie: bool
    values: np.ndarray


def part_classifier(model: RandomizedApproximator, x) -> ClassifierResult:
    """Indicator weights over target parts from the fitted distance maps.

    Certified means exactly one indicator fires.  Ties pick the lowest part
    index and are counted; all-zero indicators produce an abstention.
    """
    st = model.structured
    if st is None:
        raise ValueError("part classifier requires a structured model")
    psi, _ = partition_weights(st.pou, x, st.decomposition.n_parts, st.good_radius)
    if psi is None:
        psi = np.full(st.decomposition.n_parts, 1.0 / st.decomposition.n_parts)
    values = np.array([clf.value(psi, x) for clf in st.classifiers])
    fire = values <= st.threshold
    count = int(fire.sum())
    if count == 0:
        st.abstention_count += 1
        return ClassifierResult(None, False, None, False, values)
    weights = fire.astype(float) / count
    chosen = int(np.argmax(fire))
    tie = count > 1
    if tie:
        st.tie_count += 1
    return ClassifierResult(weights, count == 1, chosen, tie, values)


def evaluate_structured(model: RandomizedApproximator, x):
    """Output measure plus evaluation info (certified flag, chosen part)."""
    st = model.structured
    if st is None:
        raise ValueError("not a structured model")
    psi, good = partition_weights(st.pou, x, st.decomposition.n_parts, st.good_radius)
    cls = part_classifier(model, x)
    info = {"good_set": good, "certified": cls.certified and good, "part": cls.chosen,
            "tie": cls.tie, "classifier_values": cls.values}
    if psi is None or cls.weights is None:
        # off the certified set: fall back to the reference point of the
        # least-implausible part so evaluation stays total
        m = int(np.argmin(cls.values))
        from .measure import dirac

        info["certified"] = False
        return dirac(model.target_space, st.partition_y.refs[m]), info
    atoms, weights = [], []
    for n in range(st.decomposition.n_parts):
        if psi[n] == 0.0:
            continue
        for m in range(st.partition_y.n_parts):
            if cls.weights[m] == 0.0:
                continue
            atoms.append(st.sub_models[n][m](x))
            weights.append(psi[n] * cls.weights[m])
    measure = DiscreteMeasure(model.target_space, tuple(atoms), np.array(weights)).dedup()
    return measure, info


def derandomize_structured(model: RandomizedApproximator, x):
    """Local barycenter beta_{Y_m} of the output measure on the certified part."""
    st = model.structured
    measure, info = evaluate_structured(model, x)
    m = info["part"]
    if m is None:
        raise PartError("no certified part at this input (abstention)")
    part = st.partition_y.parts[m]
    for atom in measure.atoms:
        if not part.contains(atom):
            raise PartError(f"measure support escapes part {m}")
    beta = st.partition_y.structures[m].barycenter
    return beta(measure)


@dataclass
class StructuredReport:
    certified_mass: float
    sup_error_certified: float
    n_certified: int
    n_points: int
    abstentions: int
    ties: int
    delta_star: float
    eps_star: float
    mass_target_met: bool


def _part_distance(partition: GeodesicPartition, m: int, y) -> float:
    return float(partition.parts[m].distance_to(partition.space, y))


def build_structured(
    decomposition: FeatureDecomposition,
    partition_y: GeodesicPartition,
    f: Callable,
    eps_a: float,
    eps_q: float,
    eps_e: float,
    delta: float,
    seed: int,
    capacity: int = 96,
    n_atoms: int = 12,
    classifier_atoms: int = 12,
    mu_weights: np.ndarray | None = None,
) -> tuple[RandomizedApproximator, StructuredReport]:
    """Fit the partitioned model and report its certified set.

    Geometric stability of f is assumed, not checked.  The per-pair models
    f^(n,m) are trained on the part intersections; the classifiers approximate
    x -> d(f(x), Y_m) through scalar quantized mixing.  delta_star follows the
    separation rate: S_dagger(3 * eps_star).
    """
    space = decomposition.space
    xs = list(range(space.n_points))
    mu = (
        np.full(len(xs), 1.0 / len(xs))
        if mu_weights is None
        else np.asarray(mu_weights, dtype=float) / np.sum(mu_weights)
    )
    fvals = [f(x) for x in xs]
    n_parts_x = decomposition.n_parts
    m_parts_y = partition_y.n_parts
    diams = [d for d in decomposition.part_diameters() if d > 0]
    eps_star = min([eps_a, 0.5] + diams)
    delta_star = separation_inverse(partition_y, 3.0 * eps_star)
    threshold = 0.25 * eps_a
    pou = PartitionOfUnity(space, decomposition.parts)
    good_radius = 1.0 / n_parts_x

    carrier = partition_y.space

    sub_models = []
    for n in range(n_parts_x):
        row = []
        part_idx = [int(i) for i in decomposition.parts[n]]
        phi = decomposition.features[n]
        for m in range(m_parts_y):
            struct = partition_y.structures[m]
            members = [x for x in part_idx if partition_y.member(m, fvals[x])]
            if not members:
                row.append(
                    LocalModel(
                        net=_constant_net(phi.target_dim, 1),
                        feature=phi,
                        anchors=(partition_y.refs[m],),
                        mixing=struct.mixing,
                    )
                )
                continue
            values = _distinct(carrier, [fvals[x] for x in members])
            dmat = np.array(
                [[carrier.distance(a, b) for b in values] for a in values]
            )
            med = k_medoids(dmat, min(n_atoms, len(values)), seed + 11 * n + m)
            anchors = tuple(values[i] for i in med)
            pairs = []
            for x in members:
                dists = [carrier.distance(fvals[x], a) for a in anchors]
                t = np.zeros(len(anchors))
                t[int(np.argmin(dists))] = 1.0
                pairs.append((phi(x), t))
            fit = fit_universal(pairs, capacity, seed + 101 * n + m)
            row.append(LocalModel(net=fit.net, feature=phi, anchors=anchors, mixing=struct.mixing))
        sub_models.append(tuple(row))

    classifiers = []
    for m in range(m_parts_y):
        regs = []
        for n in range(n_parts_x):
            part_idx = [int(i) for i in decomposition.parts[n]]
            phi = decomposition.features[n]
            vals = np.array([_part_distance(partition_y, m, fvals[x]) for x in part_idx])
            uniq = np.unique(vals)
            med = k_medoids(
                np.abs(uniq[:, None] - uniq[None, :]),
                min(classifier_atoms, uniq.size),
                seed + 13 * m + n,
            )
            atoms = uniq[med]
            pairs = []
            for x, v in zip(part_idx, vals):
                t = np.zeros(atoms.size)
                t[int(np.argmin(np.abs(atoms - v)))] = 1.0
                pairs.append((phi(x), t))
            fit = fit_universal(pairs, capacity, seed + 301 * m + n)
            regs.append(ScalarRegressor(net=fit.net, feature=phi, atoms=atoms))
        classifiers.append(PartClassifierModel(regressors=tuple(regs)))

    st = StructuredParts(
        decomposition=decomposition,
        partition_y=partition_y,
        pou=pou,
        sub_models=tuple(sub_models),
        classifiers=tuple(classifiers),
        threshold=threshold,
        eps_a=eps_a,
        eps_q=eps_q,
        eps_e=eps_e,
        delta_star=delta_star,
        good_radius=good_radius,
    )
    model = RandomizedApproximator(
        mode="structured",
        feature=decomposition.features[0],
        core=_constant_net(decomposition.features[0].target_dim, 1),
        head_u=np.zeros((1, 1)),
        head_z=np.ones((1, 1)),
        dense_seq=tuple(partition_y.refs),
        target_space=carrier,
        seed=seed,
        structured=st,
    )

    certified, errors = [], []
    for x in xs:
        measure, info = evaluate_structured(model, x)
        if info["certified"]:
            certified.append(x)
            errors.append(w1_to_dirac(measure, fvals[x]))
    mass = float(sum(mu[x] for x in certified))
    rep = StructuredReport(
        certified_mass=mass,
        sup_error_certified=float(max(errors)) if errors else math.nan,
        n_certified=len(certified),
        n_points=len(xs),
        abstentions=st.abstention_count,
        ties=st.tie_count,
        delta_star=delta_star,
        eps_star=eps_star,
        mass_target_met=mass >= 1.0 - delta,
    )
    model.achieved_error = rep.sup_error_certified
    model.target_eps = eps_a + eps_q + eps_e
    model.met_target = (
        rep.mass_target_met and rep.sup_error_certified < model.target_eps
    )
    model.report = rep.__dict__.copy()
    return model, rep


def _constant_net(d_in: int, d_out: int) -> ReluNet:
    return ReluNet((np.zeros((d_out, d_in)),), (np.zeros(d_out),), capacity=0)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1


def _feature_to_dict(fm: FeatureMap, source: FiniteMetricSpace | None) -> dict:
    if fm.kind in ("kuratowski", "landmark"):
        if source is None:
            raise ValueError("serializing a distance-profile feature needs its space")
        return {
            "kind": "kuratowski",
            "anchors": list(fm.meta["anchors"]),
            "dist": source.dist.tolist(),
        }
    if fm.kind == "schauder":
        return {
            "kind": "schauder",
            "grid_size": fm.meta["grid_size"],
            "n": fm.target_dim,
        }
    raise ValueError(f"feature kind {fm.kind!r} not serializable")


def _feature_from_dict(doc: dict) -> FeatureMap:
    if doc["kind"] == "kuratowski":
        space = FiniteMetricSpace(np.asarray(doc["dist"], dtype=float))
        return kuratowski_embed(space, doc["anchors"])
    if doc["kind"] == "schauder":
        return fourier_feature_map(doc["grid_size"], doc["n"])
    raise ValueError(f"unknown feature kind {doc['kind']!r}")


def _target_to_dict(space, dense_seq) -> dict:
    if isinstance(space, FiniteMetricSpace):
        return {"kind": "finite", "dist": space.dist.tolist(),
                "dense_seq": [int(i) for i in dense_seq]}
    if isinstance(space, EuclideanCarrier):
        return {"kind": "euclidean", "dim": space.dim, "norm": space.norm,
                "dense_seq": [np.asarray(v, float).tolist() for v in dense_seq]}
    raise ValueError("target carrier not serializable")


def _target_from_dict(doc: dict):
    if doc["kind"] == "finite":
        space = FiniteMetricSpace(np.asarray(doc["dist"], dtype=float))
        return space, tuple(doc["dense_seq"])
    if doc["kind"] == "euclidean":
        space = EuclideanCarrier(doc["dim"], doc["norm"])
        return space, tuple(np.asarray(v, float) for v in doc["dense_seq"])
    raise ValueError(f"unknown target kind {doc['kind']!r}")


def model_to_dict(model: RandomizedApproximator, source: FiniteMetricSpace | None = None) -> dict:
    """Versioned JSON-ready description for exact re-evaluation (unstructured)."""
    if model.structured is not None:
        raise ValueError("structured models are reported, not serialized")
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": model.mode,
        "seed": model.seed,
        "use_softmax": model.use_softmax,
        "feature": _feature_to_dict(model.feature, source),
        "core": {
            "capacity": model.core.capacity,
            "weights": [w.tolist() for w in model.core.weights],
            "biases": [b.tolist() for b in model.core.biases],
        },
        "head": {"u": model.head_u.tolist(), "z": model.head_z.tolist()},
        "target": _target_to_dict(model.target_space, model.dense_seq),
        "achieved_error": model.achieved_error,
        "target_eps": model.target_eps,
        "met_target": model.met_target,
    }


def model_from_dict(doc: dict) -> RandomizedApproximator:
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc['schema_version']}")
    target_space, dense_seq = _target_from_dict(doc["target"])
    core = ReluNet(
        tuple(np.asarray(w, float) for w in doc["core"]["weights"]),
        tuple(np.asarray(b, float) for b in doc["core"]["biases"]),
        capacity=doc["core"]["capacity"],
    )
    barycenter = None
    if isinstance(target_space, EuclideanCarrier):
        from .geometry import barycenter_euclidean

        def barycenter(mu):
            return barycenter_euclidean(mu)

    return RandomizedApproximator(
        mode=doc["mode"],
        feature=_feature_from_dict(doc["feature"]),
        core=core,
        head_u=np.asarray(doc["head"]["u"], float),
        head_z=np.asarray(doc["head"]["z"], float),
        dense_seq=dense_seq,
        target_space=target_space,
        target_barycenter=barycenter,
        use_softmax=doc["use_softmax"],
        achieved_error=doc["achieved_error"],
        target_eps=doc["target_eps"],
        met_target=doc["met_target"],
        seed=doc["seed"],
    )


def model_to_json(model: RandomizedApproximator, source=None) -> str:
    return json.dumps(model_to_dict(model, source), sort_keys=True)


def model_from_json(text: str) -> RandomizedApproximator:
    return model_from_dict(json.loads(text))
