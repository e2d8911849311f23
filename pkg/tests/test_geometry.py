import math

import numpy as np
import pytest

from qas.errors import ConvergenceError, PartError, SpectralError
from qas.geometry import (
    SpdMatrix,
    barycenter_euclidean,
    check_mixing_inequality,
    circle_partition,
    contract_part,
    euclidean_qas,
    karcher_barycenter,
    separation_inverse,
    separation_lower_bound,
    spd_distance,
    spd_geodesic,
    spd_qas,
    trivial_partition,
    wasserstein_qas,
    CircleCarrier,
    SpdCarrier,
)
from qas.measure import DiscreteMeasure, dirac, w1_discrete
from qas.metric import shortest_path_metric
from qas.rng import rng_from_seed


def rand_spd(rng, d, spread=1.0):
    a = rng.standard_normal((d, d)) * spread
    return SpdMatrix(a @ a.T + np.eye(d) * (0.4 + rng.uniform(0, 1)))


def rand_invertible(rng, d):
    while True:
        m = rng.standard_normal((d, d))
        if abs(np.linalg.det(m)) > 0.1:
            return m


class TestSpdMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(SpectralError):
            SpdMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(SpectralError, match="eigenvalue"):
            SpdMatrix(np.array([[1.0, 0.0], [0.0, -2.0]]))

    def test_json_roundtrip(self):
        a = SpdMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]))
        b = SpdMatrix.from_json(a.to_json())
        assert np.allclose(a.entries, b.entries)


class TestSpdDistance:
    def test_self_distance(self):
        a = SpdMatrix(np.diag([1.0, 3.0]))
        assert spd_distance(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_scalar_formula(self):
        d = 3
        a = SpdMatrix(np.eye(d))
        b = SpdMatrix(math.e * np.eye(d))
        assert spd_distance(a, b) == pytest.approx(math.sqrt(d), abs=1e-10)

    def test_affine_invariance(self):
        rng = rng_from_seed(3)
        for _ in range(20):
            a, b = rand_spd(rng, 3), rand_spd(rng, 3)
            m = rand_invertible(rng, 3)
            lhs = spd_distance(
                SpdMatrix(m @ a.entries @ m.T), SpdMatrix(m @ b.entries @ m.T)
            )
            assert lhs == pytest.approx(spd_distance(a, b), abs=1e-8)

    def test_symmetry_and_triangle(self):
        rng = rng_from_seed(4)
        for _ in range(30):
            a, b, c = (rand_spd(rng, 3) for _ in range(3))
            assert spd_distance(a, b) == pytest.approx(spd_distance(b, a), abs=1e-9)
            assert spd_distance(a, b) <= spd_distance(a, c) + spd_distance(c, b) + 1e-8


class TestSpdGeodesic:
    def test_endpoints_per_printed_formula(self):
        rng = rng_from_seed(5)
        a, b = rand_spd(rng, 3), rand_spd(rng, 3)
        assert np.allclose(spd_geodesic([1.0, 0.0], a, b).entries, b.entries, atol=1e-9)
        assert np.allclose(spd_geodesic([0.0, 1.0], a, b).entries, a.entries, atol=1e-9)

    def test_equal_endpoints(self):
        rng = rng_from_seed(6)
        a = rand_spd(rng, 3)
        assert np.allclose(spd_geodesic([0.5, 0.5], a, a).entries, a.entries, atol=1e-10)

    def test_scalar_geometric_mean(self):
        a = SpdMatrix(np.eye(2))
        b = SpdMatrix(4.0 * np.eye(2))
        mid = spd_geodesic([0.5, 0.5], a, b)
        assert np.allclose(mid.entries, 2.0 * np.eye(2), atol=1e-10)

    def test_distance_fraction_is_first_weight(self):
        # log of the congruence-reduced geodesic scales by w1 exactly
        rng = rng_from_seed(7)
        for _ in range(10):
            a, b = rand_spd(rng, 3), rand_spd(rng, 3)
            w1 = float(rng.uniform(0, 1))
            sigma = spd_geodesic([w1, 1 - w1], a, b)
            assert spd_distance(a, sigma) == pytest.approx(
                w1 * spd_distance(a, b), abs=1e-8
            )

    def test_conical_inequality(self):
        # d(sigma(t; a, b), sigma(t; a', b')) <= (1-t) d(a,a') + t d(b,b')
        # with t the geodesic fraction from the first endpoint
        rng = rng_from_seed(8)
        for _ in range(40):
            a, b, a2, b2 = (rand_spd(rng, 2) for _ in range(4))
            t = float(rng.uniform(0, 1))
            p = spd_geodesic([t, 1 - t], a, b)
            q = spd_geodesic([t, 1 - t], a2, b2)
            bound = (1 - t) * spd_distance(a, a2) + t * spd_distance(b, b2)
            assert spd_distance(p, q) <= bound + 1e-8


class TestKarcher:
    def carrier(self, d=3):
        return SpdCarrier(d)

    def test_single_atom(self):
        rng = rng_from_seed(9)
        a = rand_spd(rng, 3)
        mu = dirac(self.carrier(), a)
        out = karcher_barycenter(mu)
        assert np.allclose(out.entries, a.entries, atol=1e-8)

    def test_repeated_atom(self):
        rng = rng_from_seed(10)
        a = rand_spd(rng, 3)
        mu = DiscreteMeasure(self.carrier(), (a, a), np.array([0.5, 0.5]))
        out = karcher_barycenter(mu)
        assert np.allclose(out.entries, a.entries, atol=1e-8)

    def test_commuting_closed_form(self):
        mu = DiscreteMeasure(
            self.carrier(2),
            (SpdMatrix(np.eye(2)), SpdMatrix(np.exp(2.0) * np.eye(2))),
            np.array([0.5, 0.5]),
        )
        out = karcher_barycenter(mu, tol=1e-10)
        assert np.allclose(out.entries, math.e * np.eye(2), atol=1e-8)

    def test_residual_below_tol(self):
        rng = rng_from_seed(11)
        for trial in range(25):
            d = int(rng.integers(2, 6))
            atoms = tuple(rand_spd(rng, d) for _ in range(3))
            mu = DiscreteMeasure(self.carrier(d), atoms, rng.dirichlet(np.ones(3)))
            out = karcher_barycenter(mu, tol=1e-8)
            # recompute the Karcher residual independently
            w_, u_ = np.linalg.eigh(out.entries)
            isq = (u_ * w_**-0.5) @ u_.T
            res = sum(
                wk * _logm(isq @ ak.entries @ isq) for wk, ak in zip(mu.weights, atoms)
            )
            assert np.linalg.norm(res, "fro") <= 1e-8

    def test_permutation_invariance(self):
        rng = rng_from_seed(12)
        atoms = tuple(rand_spd(rng, 3) for _ in range(3))
        w = np.array([0.2, 0.3, 0.5])
        mu = DiscreteMeasure(self.carrier(), atoms, w)
        perm = [2, 0, 1]
        nu = DiscreteMeasure(self.carrier(), tuple(atoms[i] for i in perm), w[perm])
        assert np.allclose(
            karcher_barycenter(mu).entries, karcher_barycenter(nu).entries, atol=1e-6
        )

    def test_congruence_equivariance(self):
        rng = rng_from_seed(13)
        atoms = tuple(rand_spd(rng, 3) for _ in range(3))
        w = np.array([0.4, 0.4, 0.2])
        m = rand_invertible(rng, 3)
        mu = DiscreteMeasure(self.carrier(), atoms, w)
        nu = DiscreteMeasure(
            self.carrier(), tuple(SpdMatrix(m @ a.entries @ m.T) for a in atoms), w
        )
        lhs = karcher_barycenter(nu, tol=1e-10).entries
        rhs = m @ karcher_barycenter(mu, tol=1e-10).entries @ m.T
        assert np.max(np.abs(lhs - rhs)) < 1e-6 * max(1.0, np.max(np.abs(rhs)))

    def test_max_iter_exceeded(self):
        rng = rng_from_seed(14)
        atoms = tuple(rand_spd(rng, 3) for _ in range(3))
        mu = DiscreteMeasure(self.carrier(), atoms, np.array([0.3, 0.3, 0.4]))
        with pytest.raises(ConvergenceError) as exc:
            karcher_barycenter(mu, tol=1e-16, max_iter=2)
        assert exc.value.residual is not None


def _logm(a):
    w, u = np.linalg.eigh(0.5 * (a + a.T))
    return (u * np.log(w)) @ u.T


class TestEuclideanBarycenter:
    def test_dirac(self):
        from qas.measure import EuclideanCarrier

        c = EuclideanCarrier(2)
        x = np.array([1.0, -2.0])
        assert np.allclose(barycenter_euclidean(dirac(c, x)), x)

    def test_midpoint(self):
        from qas.measure import EuclideanCarrier

        c = EuclideanCarrier(1)
        mu = DiscreteMeasure(c, (np.array([0.0]), np.array([2.0])), np.array([0.5, 0.5]))
        assert barycenter_euclidean(mu) == pytest.approx(1.0)

    def test_one_lipschitz_from_w1(self):
        from qas.measure import EuclideanCarrier

        c = EuclideanCarrier(2)
        rng = rng_from_seed(15)
        for _ in range(500):
            k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            mu = DiscreteMeasure(
                c, tuple(rng.standard_normal(2) for _ in range(k1)), rng.dirichlet(np.ones(k1))
            )
            nu = DiscreteMeasure(
                c, tuple(rng.standard_normal(2) for _ in range(k2)), rng.dirichlet(np.ones(k2))
            )
            gap = np.linalg.norm(barycenter_euclidean(mu) - barycenter_euclidean(nu))
            assert gap <= w1_discrete(mu, nu) + 1e-9

    def test_non_coordinate_atoms(self):
        space = shortest_path_metric([(0, 1, 1.0)], 2)
        mu = DiscreteMeasure(space, (0, 1), np.array([0.5, 0.5]))
        # integer indices are coordinate-like scalars; use a string-labeled carrier
        class Abstract:
            def distance(self, a, b):
                return 0.0 if a == b else 1.0

        bad = DiscreteMeasure(Abstract(), ("a", "b"), np.array([0.5, 0.5]))
        with pytest.raises(TypeError):
            barycenter_euclidean(bad)


class TestMixingInequality:
    def test_vertex_weight(self):
        q = euclidean_qas(2)
        pts = [np.array([0.0, 0.0]), np.array([3.0, 1.0])]
        lhs, rhs, ok = check_mixing_inequality(q, np.array([1.0, 0.0]), pts, 0)
        assert lhs == pytest.approx(0.0, abs=1e-12) and ok

    def test_all_points_equal(self):
        q = euclidean_qas(2)
        p = np.array([1.0, 1.0])
        lhs, rhs, ok = check_mixing_inequality(q, np.array([0.5, 0.5]), [p, p], 1)
        assert lhs == pytest.approx(0.0, abs=1e-12)
        assert rhs == pytest.approx(0.0, abs=1e-12)

    def test_euclidean_500_random(self):
        q = euclidean_qas(3)
        rng = rng_from_seed(16)
        for _ in range(500):
            pts = [rng.standard_normal(3) for _ in range(4)]
            w = rng.dirichlet(np.ones(4))
            i = int(rng.integers(0, 4))
            lhs, rhs, ok = check_mixing_inequality(q, w, pts, i)
            assert ok

    def test_l1_variant(self):
        q = euclidean_qas(3, norm="l1")
        rng = rng_from_seed(17)
        for _ in range(200):
            pts = [rng.standard_normal(3) for _ in range(3)]
            w = rng.dirichlet(np.ones(3))
            _, _, ok = check_mixing_inequality(q, w, pts, int(rng.integers(0, 3)))
            assert ok


class TestCirclePartition:
    def test_arc_construction(self):
        part = circle_partition(3)
        assert part.n_parts == 3
        for arc in part.parts:
            assert arc.length == pytest.approx(2 * math.pi / 3)
        # adjacent arcs share exactly the endpoint
        assert part.parts[0].contains(part.parts[1].start)
        assert not part.parts[0].contains(part.parts[1].midpoint)

    def test_requires_three(self):
        with pytest.raises(ValueError):
            circle_partition(2)

    def test_vertex_mixing_identity(self):
        part = circle_partition(3)
        arc = part.parts[0]
        pts = [0.3, 0.9, 1.5]
        eta = part.structures[0].mixing
        out = eta(np.array([1.0, 0.0, 0.0]), pts)
        assert out == pytest.approx(0.3, abs=1e-12)

    def test_contract_endpoints(self):
        part = circle_partition(4)
        theta = part.parts[1].start + 0.2
        assert contract_part(part, 1, 1.0, theta) == pytest.approx(theta, abs=1e-12)
        assert contract_part(part, 1, 0.0, theta) == pytest.approx(
            part.refs[1], abs=1e-12
        )

    def test_contract_arc_example(self):
        # arc [0, pi/2], ref pi/4, point 0, delta 1/2 -> pi/8
        part = circle_partition(4)
        out = contract_part(part, 0, 0.5, 0.0)
        assert out == pytest.approx(math.pi / 8, abs=1e-12)

    def test_contract_outside_part(self):
        part = circle_partition(3)
        with pytest.raises(PartError):
            contract_part(part, 0, 0.5, part.parts[1].midpoint)

    def test_separation_values(self):
        part = circle_partition(3)
        length = 2 * math.pi / 3
        assert separation_lower_bound(part, 1.0) == pytest.approx(0.0)
        assert separation_lower_bound(part, 0.0) == pytest.approx(length)
        assert separation_lower_bound(part, 0.5) == pytest.approx(length / 2)

    def test_separation_matches_sampled_gap(self):
        carrier = CircleCarrier()
        part = circle_partition(3)
        rng = rng_from_seed(18)
        for delta in [0.0, 0.25, 0.5, 0.9]:
            bound = separation_lower_bound(part, delta)
            # sample contracted parts and find the minimal cross-part distance
            worst = math.inf
            samples = []
            for m in range(3):
                arc = part.parts[m]
                pts = [
                    contract_part(part, m, delta, arc.unchart(arc.start + t))
                    for t in np.linspace(0, arc.length, 40)
                ]
                samples.append(pts)
            for m in range(3):
                for mm in range(m + 1, 3):
                    for p in samples[m]:
                        for q in samples[mm]:
                            worst = min(worst, carrier.distance(p, q))
            assert bound <= worst + 1e-9

    def test_separation_inverse(self):
        part = circle_partition(3)
        for delta in np.linspace(0.05, 0.95, 7):
            t = separation_lower_bound(part, delta)
            assert separation_inverse(part, t) <= delta + 1e-9
        assert separation_inverse(part, 100.0) == 0.0

    def test_contracted_parts_disjoint(self):
        part = circle_partition(5)
        for delta in [0.0, 0.5, 0.95]:
            assert separation_lower_bound(part, delta) > 0.0

    def test_circle_mixing_inequality_1000(self):
        part = circle_partition(3)
        rng = rng_from_seed(19)
        for _ in range(1000):
            m = int(rng.integers(0, 3))
            arc = part.parts[m]
            pts = [arc.unchart(arc.start + rng.uniform(0, arc.length)) for _ in range(3)]
            w = rng.dirichlet(np.ones(3))
            _, _, ok = check_mixing_inequality(part.structures[m], w, pts, int(rng.integers(0, 3)))
            assert ok

    def test_quantization_hits_endpoint_combinations(self):
        part = circle_partition(3)
        d_q, q_map = part.structures[0].quantization(1)
        assert d_q == 2
        left = q_map(np.array([2.0, 0.0]))
        right = q_map(np.array([0.0, 2.0]))
        arc = part.parts[0]
        assert left == pytest.approx(arc.unchart(arc.start), abs=1e-12)
        assert right == pytest.approx(arc.unchart(arc.start + arc.length), abs=1e-12)


class TestBarycenterIdentities:
    def test_beta_dirac_identity_all_geometries(self):
        rng = rng_from_seed(20)
        from qas.measure import EuclideanCarrier

        euc = euclidean_qas(3)
        x = rng.standard_normal(3)
        assert np.allclose(euc.barycenter(dirac(euc.space, x)), x)

        spd = spd_qas(3)
        a = rand_spd(rng, 3)
        assert np.allclose(spd.barycenter(dirac(spd.space, a)).entries, a.entries, atol=1e-8)

        part = circle_partition(3)
        theta = part.parts[1].midpoint
        assert part.structures[1].barycenter(
            dirac(part.space, theta)
        ) == pytest.approx(theta, abs=1e-12)


class TestSpdMixing:
    def test_spd_mixing_inequality_sampled(self):
        spd = spd_qas(3)
        rng = rng_from_seed(21)
        worst_ratio = 0.0
        for _ in range(150):
            pts = [rand_spd(rng, 3) for _ in range(3)]
            w = rng.dirichlet(np.ones(3))
            i = int(rng.integers(0, 3))
            lhs, rhs, ok = check_mixing_inequality(spd, w, pts, i)
            assert ok
            if rhs > 1e-12:
                worst_ratio = max(worst_ratio, lhs / rhs)
        assert worst_ratio <= 1.0 + 1e-9

    def test_wasserstein_structure(self):
        base = shortest_path_metric([(0, 1, 1.0), (1, 2, 1.5)], 3)
        q = wasserstein_qas(base)
        rng = rng_from_seed(22)
        for _ in range(100):
            mus = []
            for _ in range(3):
                k = int(rng.integers(1, 4))
                atoms = tuple(int(a) for a in rng.integers(0, 3, size=k))
                mus.append(DiscreteMeasure(base, atoms, rng.dirichlet(np.ones(k))))
            w = rng.dirichlet(np.ones(3))
            _, _, ok = check_mixing_inequality(q, w, mus, int(rng.integers(0, 3)))
            assert ok

    def test_wasserstein_quantization(self):
        base = shortest_path_metric([(0, 1, 1.0), (1, 2, 1.5)], 3)
        q = wasserstein_qas(base)
        d_q, q_map = q.quantization(2)
        assert d_q == 4
        mu = q_map(np.array([1.0, 1.0, 1.0, 2.0]))
        assert sorted(mu.atoms) == [0, 1]


class TestTrivialPartition:
    def test_single_part_contains_everything(self):
        q = euclidean_qas(2)
        part = trivial_partition(q, np.zeros(2))
        assert part.n_parts == 1
        assert part.member(0, np.array([5.0, -3.0]))
        assert separation_inverse(part, 0.1) == 0.0
