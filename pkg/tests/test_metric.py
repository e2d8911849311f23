import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qas.errors import DisconnectedGraphError, MetricConstructionError, SizeCapError
from qas.metric import (
    FiniteMetricSpace,
    doubling_constant_bruteforce,
    hausdorff_distance,
    parse_edge_list,
    separated_net,
    shortest_path_metric,
    snowflake_distance,
)
from qas.moduli import holder_modulus
from qas.rng import rng_from_seed

from oracles import shortest_paths_bruteforce


def path_space(weights=(1.0, 1.0)):
    edges = [(i, i + 1, w) for i, w in enumerate(weights)]
    return shortest_path_metric(edges, len(weights) + 1)


def random_graph_space(n, seed, extra=2):
    rng = rng_from_seed(seed)
    edges = [(int(rng.integers(0, v)), v, float(rng.uniform(0.3, 2.0))) for v in range(1, n)]
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.append((int(u), int(v), float(rng.uniform(0.3, 2.0))))
    return shortest_path_metric(edges, n), edges


class TestFiniteMetricSpace:
    def test_rejects_asymmetry(self):
        with pytest.raises(MetricConstructionError):
            FiniteMetricSpace(np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_rejects_triangle_violation(self):
        d = np.array([[0, 1, 5.0], [1, 0, 1], [5.0, 1, 0]])
        with pytest.raises(MetricConstructionError, match="triangle"):
            FiniteMetricSpace(d)

    def test_rejects_zero_offdiagonal(self):
        d = np.zeros((2, 2))
        with pytest.raises(MetricConstructionError):
            FiniteMetricSpace(d)

    def test_triangle_holds_exhaustively(self):
        s, _ = random_graph_space(12, seed=5)
        d = s.dist
        n = s.n_points
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    assert d[i, j] <= d[i, k] + d[k, j] + 1e-12


class TestShortestPath:
    def test_single_edge(self):
        s = shortest_path_metric([(0, 1, 3.0)], 2)
        assert s.distance(0, 1) == 3.0

    def test_triangle_heavy_edge(self):
        s = shortest_path_metric([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)], 3)
        assert s.distance(0, 2) == pytest.approx(2.0)

    def test_path_graph(self):
        s = path_space()
        assert s.distance(0, 2) == pytest.approx(2.0)

    def test_disconnected_names_pair(self):
        with pytest.raises(DisconnectedGraphError, match=r"\d"):
            shortest_path_metric([(0, 1, 1.0)], 3)

    def test_nonpositive_weight(self):
        with pytest.raises(ValueError):
            shortest_path_metric([(0, 1, 0.0)], 2)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_bellman_ford_oracle(self, seed):
        s, edges = random_graph_space(9, seed=seed, extra=4)
        oracle = shortest_paths_bruteforce(edges, 9)
        assert np.allclose(s.dist, oracle, atol=1e-10)


class TestEdgeList:
    def test_parse_roundtrip(self):
        edges, n = parse_edge_list("0 1 2.5\n1 2 1.0\n")
        assert edges == [(0, 1, 2.5), (1, 2, 1.0)] and n == 3

    def test_parse_error_carries_line_number(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_edge_list("0 1 1.0\n0 oops 1.0\n")


class TestSnowflake:
    def test_identity_modulus(self):
        s = path_space()
        t = snowflake_distance(holder_modulus(L=1, alpha=1), s)
        assert np.allclose(t.dist, s.dist)

    def test_sqrt_two_point(self):
        s = shortest_path_metric([(0, 1, 4.0)], 2)
        t = snowflake_distance(holder_modulus(L=1, alpha=0.5), s)
        assert t.distance(0, 1) == pytest.approx(2.0)

    def test_three_point_path(self):
        s = path_space((1.0, 1.0))
        t = snowflake_distance(holder_modulus(L=1, alpha=0.5), s)
        assert t.distance(0, 2) == pytest.approx(math.sqrt(2.0))
        assert t.distance(0, 1) + t.distance(1, 2) > t.distance(0, 2) + 0.1

    @given(st.integers(min_value=0, max_value=1000), st.floats(min_value=0.3, max_value=1.0))
    @settings(max_examples=40, deadline=None)
    def test_random_snowflakes_stay_metric(self, seed, alpha):
        s, _ = random_graph_space(7, seed=seed)
        snowflake_distance(holder_modulus(L=1.0, alpha=alpha), s)  # validates inside


class TestHausdorff:
    def test_equal_sets(self):
        s = path_space()
        assert hausdorff_distance(s, [0, 1], [0, 1]) == 0.0

    def test_singletons(self):
        s = path_space()
        assert hausdorff_distance(s, [0], [2]) == pytest.approx(2.0)

    def test_directed_max(self):
        s = path_space()
        assert hausdorff_distance(s, [0], [1, 2]) == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hausdorff_distance(path_space(), [], [0])

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_bruteforce(self, seed):
        s, _ = random_graph_space(8, seed=seed + 50)
        rng = rng_from_seed(seed)
        a = sorted(set(int(i) for i in rng.integers(0, 8, size=3)))
        b = sorted(set(int(i) for i in rng.integers(0, 8, size=4)))
        direct = max(
            max(min(s.distance(x, y) for y in b) for x in a),
            max(min(s.distance(x, y) for x in a) for y in b),
        )
        assert hausdorff_distance(s, a, b) == pytest.approx(direct)


class TestDoubling:
    def test_single_point(self):
        assert doubling_constant_bruteforce(FiniteMetricSpace(np.zeros((1, 1)))).constant == 1

    def test_two_point(self):
        s = shortest_path_metric([(0, 1, 4.0)], 2)
        assert doubling_constant_bruteforce(s).constant <= 2

    def test_uniform_four_point(self):
        d = np.ones((4, 4)) - np.eye(4)
        est = doubling_constant_bruteforce(FiniteMetricSpace(d))
        assert est.constant == 4 and est.exact

    def test_cap(self):
        d = np.abs(np.subtract.outer(np.arange(70.0), np.arange(70.0)))
        with pytest.raises(SizeCapError):
            doubling_constant_bruteforce(FiniteMetricSpace(d), cap=64)

    @pytest.mark.parametrize("seed", range(5))
    def test_snowflake_doubling_exponent_bound(self, seed):
        # The snowflaked doubling constant obeys C' <= C^ceil(-log2(h_dagger(1/4))):
        # with omega(R) = 2*omega(r) and h(1/s) <= 1/4 one gets R <= s*r, and
        # iterated doubling covers B(x, 2^k r) with C^k balls.  Exact constants
        # require the full critical radius grid.
        from qas.metric import critical_radius_grid

        rng = rng_from_seed(seed, stream=2)
        alpha = float(rng.uniform(0.4, 1.0))
        m = holder_modulus(L=1.0, alpha=alpha)
        s, _ = random_graph_space(8, seed=seed + 200)
        flaked_s = snowflake_distance(m, s)
        base = doubling_constant_bruteforce(s, radii=critical_radius_grid(s)).constant
        flaked = doubling_constant_bruteforce(
            flaked_s, radii=critical_radius_grid(flaked_s)
        ).constant
        hd = m.h_dagger(0.25)
        if math.isinf(hd):
            pytest.skip("companion never reaches 1/4 on the probe grid")
        bound = base ** math.ceil(-math.log2(hd))
        assert flaked <= bound


class TestSeparatedNet:
    def test_delta_above_diameter(self):
        s = path_space()
        assert separated_net(s, 10.0) == [0]

    def test_delta_below_min_distance(self):
        s = path_space()
        assert separated_net(s, 0.5) == [0, 1, 2]

    def test_greedy_trace(self):
        s = path_space()
        assert separated_net(s, 1.5) == [0, 2]

    def test_delta_positive_required(self):
        with pytest.raises(ValueError):
            separated_net(path_space(), 0.0)

    @given(st.integers(min_value=0, max_value=500), st.floats(min_value=0.2, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_net_separated_and_covering(self, seed, delta):
        s, _ = random_graph_space(9, seed=seed)
        net = separated_net(s, delta)
        for a in net:
            for b in net:
                if a != b:
                    assert s.distance(a, b) >= delta
        for x in range(s.n_points):
            assert min(s.distance(x, a) for a in net) < delta or x in net
