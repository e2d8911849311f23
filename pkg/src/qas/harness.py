"""Batch experiment runner: config ingestion, deterministic execution, reports.

Configs are flat JSON with explicit field names; every experiment takes its
randomness from the config seed, so identical configs produce byte-identical
``report.json`` and ``errors.csv``.  Wall time is therefore written to a
separate ``timing.json`` sidecar, never into the deterministic report.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .approximator import (
    FeatureDecomposition,
    build_structured,
    build_unstructured,
    derandomize,
    evaluate,
    evaluate_structured,
    model_to_dict,
    partition_weights,
    PartitionOfUnity,
)
from .carnot import (
    PiecewiseLinearPath,
    Step2GroupElement,
    TangentCarrier,
    cc_homogeneous_norm,
    group_inverse,
    group_multiply,
    rde_flow_oracle,
)
from .errors import CoverError
from .feature import fourier_feature_map, fourier_synthesize, kuratowski_embed, schauder_truncate
from .geometry import (
    SpdCarrier,
    SpdMatrix,
    circle_partition,
    karcher_barycenter,
    euclidean_qas,
    check_mixing_inequality,
    spd_qas,
    wasserstein_qas,
)
from .measure import DiscreteMeasure, EuclideanCarrier, dirac, mix_wasserstein, w1_discrete, w1_to_dirac
from .metric import FiniteMetricSpace, parse_edge_list, shortest_path_metric
from .moduli import holder_modulus
from .rng import rng_from_seed

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "emit_report",
    "load_config",
    "verify_cover",
    "random_connected_graph",
    "hard_sigmoid",
    "run_invariant_suite",
]

KINDS = (
    "graph_map",
    "graph_coloring",
    "classification",
    "operator",
    "circle_target",
    "spd_map",
    "rde_flow",
    "invariant_suite",
)

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    capacity: int = 64
    n_atoms: int = 16
    q_slots: int = 1
    feature_dim: int = 0  # 0 means "natural full dimension"
    eps_a: float = 0.1
    eps_q: float = 0.1
    eps_e: float = 0.1
    delta: float = 0.1
    threshold: float = math.nan  # pass/fail threshold on the headline error
    graph_file: str | None = None
    cover_file: str | None = None
    output_dir: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.seed is None:
            raise ValueError("a seed is required")
        for name in ("eps_a", "eps_q", "eps_e", "delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def eps_total(self) -> float:
        return self.eps_a + self.eps_q + self.eps_e


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    doc = json.loads(Path(path).read_text())
    known = {f for f in ExperimentConfig.__dataclass_fields__ if f != "extra"}
    kwargs = {k: v for k, v in doc.items() if k in known}
    extra = {k: v for k, v in doc.items() if k not in known}
    return ExperimentConfig(**kwargs, extra=extra)


@dataclass
class ExperimentReport:
    kind: str
    seed: int
    sup_w1_error: float
    certified_mass: float
    param_counts: dict
    per_point: list  # rows: (input id, w1 error, certified flag, part index)
    thresholds: dict
    passed: bool
    details: dict = field(default_factory=dict)
    wall_time_s: float = math.nan  # excluded from the deterministic report files

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "sup_w1_error": self.sup_w1_error,
            "certified_mass": self.certified_mass,
            "param_counts": self.param_counts,
            "thresholds": self.thresholds,
            "passed": self.passed,
            "details": self.details,
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str, per_point=None) -> "ExperimentReport":
        doc = json.loads(text)
        if doc["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {doc['schema_version']}")
        return cls(
            kind=doc["kind"],
            seed=doc["seed"],
            sup_w1_error=doc["sup_w1_error"],
            certified_mass=doc["certified_mass"],
            param_counts=doc["param_counts"],
            per_point=per_point if per_point is not None else [],
            thresholds=doc["thresholds"],
            passed=doc["passed"],
            details=doc["details"],
        )


def emit_report(r: ExperimentReport, out_dir: str | os.PathLike) -> dict:
    """Write report.json, errors.csv, and the timing sidecar; returns paths."""
    out = Path(os.environ.get("QAS_OUTPUT_DIR", out_dir))
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    csv_path = out / "errors.csv"
    timing_path = out / "timing.json"
    report_path.write_text(r.to_json())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["input_id", "w1_error", "certified", "part_index"])
    for row in r.per_point:
        writer.writerow(["%s" % row[0], "%.17g" % row[1], int(row[2]), row[3]])
    csv_path.write_text(buf.getvalue())
    timing_path.write_text(json.dumps({"wall_time_s": r.wall_time_s}))
    return {"report": str(report_path), "errors": str(csv_path), "timing": str(timing_path)}


def hard_sigmoid(u: float) -> float:
    """Clamp to [0, 1] (the printed min/max order is corrected to be non-constant)."""
    return float(min(max(u, 0.0), 1.0))


def random_connected_graph(n: int, seed: int, extra_edges: int = 0) -> FiniteMetricSpace:
    """Random spanning tree plus extra edges, positive uniform weights."""
    rng = rng_from_seed(seed, stream=3)
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, float(rng.uniform(0.2, 2.0))))
    for _ in range(extra_edges):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.append((int(u), int(v), float(rng.uniform(0.2, 2.0))))
    return shortest_path_metric(edges, n)


def verify_cover(space: FiniteMetricSpace, cover: list[list[int]]) -> None:
    """Check d_G = d_{G_i} on every piece of a supplied subgraph cover.

    The piece metric is the shortest-path metric of the induced subspace
    (paths forced through the piece); equality with the global metric is the
    contract the partition corollary requires.
    """
    covered = set()
    for i, piece in enumerate(cover):
        covered.update(piece)
        idx = list(piece)
        sub = space.dist[np.ix_(idx, idx)]
        # induced piece metric: shortest paths within the piece, seeded by
        # direct global distances between its points
        from scipy.sparse.csgraph import shortest_path as sp

        internal = sp(sub, method="FW", directed=False)
        gap = float(np.max(np.abs(internal - sub)))
        if gap > 1e-9:
            a, b = np.unravel_index(int(np.argmax(np.abs(internal - sub))), sub.shape)
            raise CoverError(
                f"piece {i}: global and piece metrics differ at ({idx[a]},{idx[b]}) by {gap:.3e}"
            )
    if covered != set(range(space.n_points)):
        missing = sorted(set(range(space.n_points)) - covered)
        raise CoverError(f"cover misses vertices {missing}")


# ---------------------------------------------------------------------------
# individual experiments
# ---------------------------------------------------------------------------

def _run_graph_map(cfg: ExperimentConfig) -> ExperimentReport:
    rng = rng_from_seed(cfg.seed)
    n_src = int(cfg.extra.get("n_source", 8))
    n_tgt = int(cfg.extra.get("n_target", 8))
    if cfg.graph_file:
        edges, n = parse_edge_list(Path(cfg.graph_file).read_text())
        source = shortest_path_metric(edges, n)
    else:
        source = random_connected_graph(n_src, cfg.seed, extra_edges=n_src // 2)
    target = random_connected_graph(n_tgt, cfg.seed + 1, extra_edges=n_tgt // 2)
    fmap = {x: int(rng.integers(0, target.n_points)) for x in range(source.n_points)}
    f = fmap.__getitem__

    feature = kuratowski_embed(source, range(source.n_points))
    n_range = len(set(fmap.values()))
    model = build_unstructured(
        train_inputs=range(source.n_points),
        f=f,
        feature=feature,
        target_space=target,
        eps=cfg.threshold if np.isfinite(cfg.threshold) else 1e-6,
        n_atoms=max(cfg.n_atoms, n_range),
        capacity=cfg.capacity,
        seed=cfg.seed,
        q_slots=cfg.q_slots,
        capacity_sweep=[cfg.capacity // 4, cfg.capacity // 2, cfg.capacity],
    )
    per_point = []
    for x in range(source.n_points):
        err = w1_to_dirac(evaluate(model, x), f(x))
        per_point.append((x, err, True, -1))
    sup = max(e for _, e, _, _ in per_point)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 1e-6
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"model": model.n_params(), "capacity": model.core.capacity,
                      "n_atoms": int(model.head_u.shape[0])},
        per_point=per_point,
        thresholds={"sup_w1_error": threshold},
        passed=sup <= threshold,
        details={"target_diameter": target.diameter(),
                 "model": model_to_dict(model, source)},
    )


def _run_graph_coloring(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.graph_file:
        edges, n = parse_edge_list(Path(cfg.graph_file).read_text())
    else:
        # 3x3 grid graph, 2-colorable like any bipartite graph
        n = 9
        edges = []
        for r in range(3):
            for c in range(3):
                v = 3 * r + c
                if c < 2:
                    edges.append((v, v + 1, 1.0))
                if r < 2:
                    edges.append((v, v + 3, 1.0))
    space = shortest_path_metric(edges, n)
    adjacency = [(i, j) for i, j, _ in edges]
    if cfg.cover_file:
        cover = json.loads(Path(cfg.cover_file).read_text())
    else:
        cover = cfg.extra.get("cover") or [list(range(n))]
    cover = [[int(v) for v in piece] for piece in cover]
    verify_cover(space, cover)
    k = int(cfg.extra.get("n_colors", 2))
    coloring = cfg.extra.get("coloring")
    if coloring is None:
        coloring = [(v // 3 + v % 3) % 2 for v in range(n)]  # grid 2-coloring
    colors = FiniteMetricSpace(np.abs(np.subtract.outer(range(k), range(k))).astype(float))

    pou = PartitionOfUnity(space, tuple(tuple(p) for p in cover))
    sub_models = []
    for piece in cover:
        feature = kuratowski_embed(space, piece)
        model = build_unstructured(
            train_inputs=piece,
            f=lambda x: int(coloring[x]),
            feature=feature,
            target_space=colors,
            eps=0.25,
            n_atoms=k,
            capacity=cfg.capacity,
            seed=cfg.seed,
        )
        sub_models.append(model)

    per_point, violations = [], 0
    argmax_color = {}
    for x in range(n):
        psi, good = partition_weights(pou, x, len(cover), r=0.5)
        if psi is None:
            psi = np.array([1.0 if x in set(p) else 0.0 for p in cover])
            psi = psi / psi.sum()
        blocks = [evaluate(m, x) if x in set(p) else dirac(colors, int(coloring[x]))
                  for m, p in zip(sub_models, cover)]
        mixed = mix_wasserstein(psi, blocks)
        err = w1_to_dirac(mixed, int(coloring[x]))
        weights_by_color = np.zeros(k)
        for a, w in zip(mixed.atoms, mixed.weights):
            weights_by_color[int(a)] += w
        argmax_color[x] = int(np.argmax(weights_by_color))
        per_point.append((x, err, True, argmax_color[x]))
    for i, j in adjacency:
        if argmax_color[i] == argmax_color[j]:
            violations += 1
    sup = max(e for _, e, _, _ in per_point)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 0.5
    passed = sup < threshold and violations == 0
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"pieces": len(cover),
                      "model": sum(m.n_params() for m in sub_models)},
        per_point=per_point,
        thresholds={"sup_w1_error": threshold, "violations": 0},
        passed=passed,
        details={"violations": violations, "n_colors": k},
    )


def _run_classification(cfg: ExperimentConfig) -> ExperimentReport:
    # Lipschitz kernel P(Y=0 | X=x) = clamp(x, 0, 1) on a grid of [0, 1]
    n_grid = int(cfg.extra.get("n_grid", 41))
    xs = np.linspace(0.0, 1.0, n_grid)
    kernel = lambda x: hard_sigmoid(x)

    pairs = [(np.array([x]), np.array([kernel(x)])) for x in xs]
    from .approximator import fit_universal, relu_forward

    fit = fit_universal(pairs, cfg.capacity, cfg.seed)
    two_pt = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))

    per_point = []
    head_weights = []
    for i, x in enumerate(xs):
        u = float(relu_forward(fit.net, np.array([x]))[0])
        w0 = hard_sigmoid(u)
        head_weights.append(w0)
        model_measure = DiscreteMeasure(two_pt, (0, 1), np.array([w0, 1.0 - w0]))
        true_measure = DiscreteMeasure(two_pt, (0, 1), np.array([kernel(x), 1.0 - kernel(x)]))
        err = w1_discrete(model_measure, true_measure)
        per_point.append((i, err, True, -1))
    sup = max(e for _, e, _, _ in per_point)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 0.05
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"model": fit.net.n_params(), "capacity": cfg.capacity},
        per_point=per_point,
        thresholds={"sup_w1_error": threshold},
        passed=sup < threshold,
        details={"head_weight_range": [float(min(head_weights)), float(max(head_weights))],
                 "fit_max_error": fit.max_error},
    )


def _band_limited_functions(rng, n_funcs: int, grid: int, max_freq: int = 3) -> np.ndarray:
    theta = np.arange(grid) * (2 * np.pi / grid)
    out = []
    for _ in range(n_funcs):
        u = np.full(grid, rng.uniform(-0.5, 0.5))
        for k in range(1, max_freq + 1):
            u += rng.uniform(-0.7, 0.7) / k * np.cos(k * theta)
            u += rng.uniform(-0.7, 0.7) / k * np.sin(k * theta)
        out.append(u)
    return np.array(out)


def _run_operator(cfg: ExperimentConfig) -> ExperimentReport:
    """Pointwise square composed with a frequency truncation, learned from
    d=8 Fourier features; error measured in the coefficient l2 norm.

    The head atoms form a cross-polytope frame around the sampled range, so
    the exact target is a convex combination of the atoms with piecewise
    linear barycentric weights; the net regresses those weights.
    """
    grid = int(cfg.extra.get("grid", 64))
    d_feat = int(cfg.extra.get("feature_dim", cfg.feature_dim) or 8)
    out_coeffs = int(cfg.extra.get("out_coeffs", 11))  # through frequency 5
    n_train = int(cfg.extra.get("n_train", 400))
    n_test = int(cfg.extra.get("n_test", 20))
    max_freq = int(cfg.extra.get("max_freq", 2))
    rng = rng_from_seed(cfg.seed, stream=5)

    def truth(u: np.ndarray) -> np.ndarray:
        return schauder_truncate(u * u, out_coeffs)

    train = _band_limited_functions(rng, n_train, grid, max_freq=max_freq)
    test = _band_limited_functions(rng, n_test, grid, max_freq=max_freq)
    feature = fourier_feature_map(grid, d_feat)

    carrier = EuclideanCarrier(out_coeffs, norm="l2")
    train_targets = np.array([truth(u) for u in train])
    center = train_targets.mean(axis=0)
    radius = 1.3 * float(np.abs(train_targets - center).sum(axis=1).max())
    frame = [center]
    for i in range(out_coeffs):
        e = np.zeros(out_coeffs)
        e[i] = radius
        frame += [center + e, center - e]

    def frame_weights(y: np.ndarray) -> np.ndarray:
        r = (np.asarray(y, float) - center) / radius
        w = np.empty(1 + 2 * out_coeffs)
        w[0] = 1.0 - np.abs(r).sum()
        w[1::2] = np.maximum(r, 0.0)
        w[2::2] = np.maximum(-r, 0.0)
        return w

    model = build_unstructured(
        train_inputs=list(train),
        f=truth,
        feature=feature,
        target_space=carrier,
        eps=cfg.threshold if np.isfinite(cfg.threshold) else 0.1,
        n_atoms=len(frame),
        capacity=cfg.capacity,
        seed=cfg.seed,
        dense_seq=frame,
        atoms=frame,
        target_weights=frame_weights,
        target_barycenter=lambda mu: mu.weights @ np.array([np.asarray(a) for a in mu.atoms]),
    )
    per_point = []
    for i, u in enumerate(test):
        pred = derandomize(model, u)
        err = float(np.linalg.norm(pred - truth(u)))
        per_point.append((i, err, True, -1))
    sup = max(e for _, e, _, _ in per_point)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 0.1
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"model": model.n_params(), "feature_dim": d_feat,
                      "n_atoms": int(model.head_u.shape[0])},
        per_point=per_point,
        thresholds={"sup_l2_error": threshold},
        passed=sup < threshold,
        details={"grid": grid, "out_coeffs": out_coeffs},
    )


def _run_circle_target(cfg: ExperimentConfig) -> ExperimentReport:
    m_arcs = int(cfg.extra.get("m_arcs", 3))
    n_sample = int(cfg.extra.get("n_sample", 96))
    shift = float(cfg.extra.get("shift", 0.7))
    thetas = np.arange(n_sample) * (2 * np.pi / n_sample)
    gaps = np.abs(thetas[:, None] - thetas[None, :])
    dist = np.minimum(gaps, 2 * np.pi - gaps)
    np.fill_diagonal(dist, 0.0)
    source = FiniteMetricSpace(dist, labels=tuple(thetas))

    def f(x: int) -> float:
        return float((thetas[x] + shift) % (2 * np.pi))  # degree-1 map

    partition = circle_partition(m_arcs)
    decomposition = FeatureDecomposition(
        space=source,
        parts=(tuple(range(n_sample)),),
        features=(kuratowski_embed(source, range(n_sample)),),
    )
    model, rep = build_structured(
        decomposition,
        partition,
        f,
        eps_a=cfg.eps_a,
        eps_q=cfg.eps_q,
        eps_e=cfg.eps_e,
        delta=cfg.delta,
        seed=cfg.seed,
        capacity=max(cfg.capacity, n_sample + 16),
        n_atoms=cfg.n_atoms,
        classifier_atoms=cfg.n_atoms,
    )
    per_point = []
    agree = 0
    n_certified = 0
    for x in range(n_sample):
        measure, info = evaluate_structured(model, x)
        err = w1_to_dirac(measure, f(x))
        part = info["part"] if info["part"] is not None else -1
        per_point.append((x, err, bool(info["certified"]), part))
        if info["certified"]:
            n_certified += 1
            if part in partition.membership(f(x)):
                agree += 1
    diam = math.pi
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 0.1 * diam
    mass_target = 1.0 - cfg.delta
    sup_cert = max((e for _, e, c, _ in per_point if c), default=math.nan)
    passed = (
        rep.certified_mass >= mass_target
        and sup_cert <= threshold
        and agree == n_certified
    )
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup_cert,
        certified_mass=rep.certified_mass,
        param_counts={"model": model.n_params(), "m_arcs": m_arcs,
                      "n_sample": n_sample},
        per_point=per_point,
        thresholds={"sup_error_certified": threshold, "certified_mass": mass_target},
        passed=passed,
        details={"delta_star": rep.delta_star, "eps_star": rep.eps_star,
                 "classifier_agreement": agree, "n_certified": n_certified,
                 "abstentions": rep.abstentions, "ties": rep.ties},
    )


def _random_spd(rng, d: int, spread: float = 1.0) -> SpdMatrix:
    a = rng.standard_normal((d, d)) * spread
    return SpdMatrix(a @ a.T + np.eye(d) * (0.5 + rng.uniform(0, 1)))


def _run_spd_map(cfg: ExperimentConfig) -> ExperimentReport:
    d = int(cfg.extra.get("spd_dim", 3))
    n_src = int(cfg.extra.get("n_source", 10))
    rng = rng_from_seed(cfg.seed, stream=9)
    source = random_connected_graph(n_src, cfg.seed, extra_edges=2)
    targets = [_random_spd(rng, d) for _ in range(n_src)]
    f = targets.__getitem__
    carrier = SpdCarrier(d)
    structure = spd_qas(d)
    model = build_unstructured(
        train_inputs=range(n_src),
        f=f,
        feature=kuratowski_embed(source, range(n_src)),
        target_space=carrier,
        eps=cfg.threshold if np.isfinite(cfg.threshold) else 1e-6,
        n_atoms=max(cfg.n_atoms, n_src),
        capacity=cfg.capacity,
        seed=cfg.seed,
        target_barycenter=structure.barycenter,
    )
    per_point = []
    for x in range(n_src):
        point = derandomize(model, x)
        err = carrier.distance(point, f(x))
        bound = w1_to_dirac(evaluate(model, x), f(x))
        if err > bound + 1e-9:
            raise AssertionError("barycenter contraction bound violated")
        per_point.append((x, err, True, -1))
    sup = max(e for _, e, _, _ in per_point)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 1e-6
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"model": model.n_params(), "spd_dim": d},
        per_point=per_point,
        thresholds={"sup_error": threshold},
        passed=sup <= threshold,
        details={},
    )


def _run_rde_flow(cfg: ExperimentConfig) -> ExperimentReport:
    n_src = int(cfg.extra.get("n_source", 12))
    alpha = float(cfg.extra.get("snowflake_alpha", 0.75))
    rng = rng_from_seed(cfg.seed, stream=13)
    # driver: fixed smooth-ish zig-zag in R^2; vector field: linear rotation+decay
    times = np.linspace(0.0, 1.0, 9)
    vertices = np.cumsum(rng.standard_normal((9, 2)) * 0.3, axis=0)
    driver = PiecewiseLinearPath(vertices, times)
    mat_a = np.array([[0.0, -0.8], [0.8, 0.0]])
    mat_b = np.array([[-0.3, 0.0], [0.0, -0.3]])

    def vf(y: np.ndarray) -> np.ndarray:
        return np.column_stack([mat_a @ y, mat_b @ y + np.array([0.1, 0.0])])

    elements = []
    for _ in range(n_src):
        a = rng.uniform(-1.0, 1.0, size=2)
        c = rng.uniform(-0.5, 0.5)
        elements.append(Step2GroupElement(a, np.array([[0.0, c], [-c, 0.0]])))

    omega = holder_modulus(L=1.0, alpha=alpha)
    dmat = np.zeros((n_src, n_src))
    for i in range(n_src):
        for j in range(i + 1, n_src):
            base = cc_homogeneous_norm(group_multiply(group_inverse(elements[i]), elements[j]))
            dmat[i, j] = dmat[j, i] = omega(base)
    source = FiniteMetricSpace(dmat)

    carrier = TangentCarrier()
    flows = {}
    for i, g in enumerate(elements):
        y_t, _ = rde_flow_oracle(vf, driver, g.a, step=0.02)
        flows[i] = Step2GroupElement(y_t, np.zeros((2, 2)))
    f = flows.__getitem__

    model = build_unstructured(
        train_inputs=range(n_src),
        f=f,
        feature=kuratowski_embed(source, range(n_src)),
        target_space=carrier,
        eps=cfg.threshold if np.isfinite(cfg.threshold) else 1e-6,
        n_atoms=n_src,
        capacity=cfg.capacity,
        seed=cfg.seed,
    )
    per_point = []
    for x in range(n_src):
        err = w1_to_dirac(evaluate(model, x), f(x))
        per_point.append((x, err, True, -1))
    sup = max(e for _, e, _, _ in per_point)
    # empirical Lipschitz ratio of the flow w.r.t. initial conditions
    ratios = []
    for i in range(n_src):
        for j in range(i + 1, n_src):
            den = float(np.linalg.norm(elements[i].a - elements[j].a))
            if den > 1e-9:
                ratios.append(carrier.distance(flows[i], flows[j]) / den)
    threshold = cfg.threshold if np.isfinite(cfg.threshold) else 1e-6
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=sup,
        certified_mass=1.0,
        param_counts={"model": model.n_params(), "n_source": n_src},
        per_point=per_point,
        thresholds={"sup_error": threshold},
        passed=sup <= threshold,
        details={"flow_lipschitz_ratio_max": float(max(ratios))},
    )


def _run_invariant_suite(cfg: ExperimentConfig) -> ExperimentReport:
    results = run_invariant_suite(cfg.seed, n_trials=int(cfg.extra.get("n_trials", 200)))
    per_point = [(name, res["worst_slack"], res["ok"], -1) for name, res in results.items()]
    passed = all(res["ok"] for res in results.values())
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        sup_w1_error=max(res["worst_slack"] for res in results.values()),
        certified_mass=1.0,
        param_counts={},
        per_point=per_point,
        thresholds={"slack": 1e-9},
        passed=passed,
        details={k: v for k, v in results.items()},
    )


def run_invariant_suite(seed: int, n_trials: int = 200) -> dict:
    """Programmatic mixing-inequality battery over the registered geometries."""
    rng = rng_from_seed(seed, stream=17)
    out = {}

    def record(name: str, slacks: list[float]):
        worst = float(max(slacks))
        out[name] = {"worst_slack": worst, "ok": worst <= 1e-9, "n": len(slacks)}

    euc = euclidean_qas(3)
    slacks = []
    for _ in range(n_trials):
        pts = [rng.standard_normal(3) for _ in range(4)]
        w = rng.dirichlet(np.ones(4))
        i = int(rng.integers(0, 4))
        lhs, rhs, _ = check_mixing_inequality(euc, w, pts, i)
        slacks.append(lhs - rhs)
    record("euclidean", slacks)

    base = random_connected_graph(6, seed)
    wstruct = wasserstein_qas(base)
    slacks = []
    for _ in range(n_trials):
        measures = []
        for _ in range(3):
            atoms = tuple(int(a) for a in rng.integers(0, 6, size=3))
            measures.append(DiscreteMeasure(base, atoms, rng.dirichlet(np.ones(3))))
        w = rng.dirichlet(np.ones(3))
        i = int(rng.integers(0, 3))
        lhs, rhs, _ = check_mixing_inequality(wstruct, w, measures, i)
        slacks.append(lhs - rhs)
    record("wasserstein", slacks)

    spd = spd_qas(3)
    slacks = []
    for _ in range(n_trials):
        pts = [_random_spd(rng, 3) for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        i = int(rng.integers(0, 3))
        lhs, rhs, _ = check_mixing_inequality(spd, w, pts, i)
        slacks.append(lhs - rhs)
    record("spd", slacks)

    part = circle_partition(3)
    slacks = []
    for _ in range(n_trials):
        m = int(rng.integers(0, 3))
        arc = part.parts[m]
        pts = [arc.unchart(arc.start + rng.uniform(0, arc.length)) for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        i = int(rng.integers(0, 3))
        lhs, rhs, _ = check_mixing_inequality(part.structures[m], w, pts, i)
        slacks.append(lhs - rhs)
    record("circle_arc", slacks)
    return out


_RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "graph_map": _run_graph_map,
    "graph_coloring": _run_graph_coloring,
    "classification": _run_classification,
    "operator": _run_operator,
    "circle_target": _run_circle_target,
    "spd_map": _run_spd_map,
    "rde_flow": _run_rde_flow,
    "invariant_suite": _run_invariant_suite,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Dispatch on the config kind; deterministic given the seed."""
    start = time.perf_counter()
    report = _RUNNERS[cfg.kind](cfg)
    report.wall_time_s = time.perf_counter() - start
    if cfg.output_dir:
        emit_report(report, cfg.output_dir)
    return report
