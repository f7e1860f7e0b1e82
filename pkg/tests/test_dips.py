"""Doubly indexed permutation statistics: oracles, coupling, applications."""

import itertools
import math

import numpy as np
import pytest

from concentra.errors import ResourceLimitError
from concentra.dips import (
    DenseDipsArray,
    DipsPairSample,
    GraphOverlapArray,
    MwwDipsArray,
    ProductDipsArray,
    a2_matrix,
    center,
    dips_pair_sampler,
    dips_tail_bound,
    eta_bn,
    graph_centered_w1,
    graph_mean,
    graph_overlap_statistic,
    graph_tail_bound,
    lambda_dips,
    mww_array,
    mww_statistic,
    mww_tail_bound,
    parse_edge_list,
    phi_bn,
    random_dips_array,
    random_graph_edges,
    rank_permutation,
    remainder_r1,
    v1_statistic,
)
from concentra.harness import dips_linearity_residual


def brute_force_v1(array, pi):
    n = array.n
    return sum(
        float(array.a(s, t, pi[s], pi[t]))
        for s in range(n) for t in range(n) if s != t
    )


def brute_force_a2(array):
    n = array.n
    out = np.zeros((n, n))
    for s in range(n):
        for t in range(n):
            out[s, t] = sum(
                float(array.a(s, i, t, j)) for i in range(n) for j in range(n)
            ) / n
    return out


class TestV1Statistic:
    def test_zero_array(self):
        arr = DenseDipsArray(np.zeros((3, 3, 3, 3)))
        assert v1_statistic(arr, np.arange(3)) == 0.0

    def test_mww_bridge_small(self):
        """V1 at the rank permutation equals V_MWW - n1 n2 / 2."""
        x = np.array([1.0, 3.0])
        y = np.array([2.0, 4.0])
        arr = mww_array(2, 2)
        pi = rank_permutation(x, y)
        assert v1_statistic(arr, pi) == pytest.approx(mww_statistic(x, y) - 2.0)

    def test_mww_bridge_random_data(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n1, n2 = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            x = rng.normal(size=n1)
            y = rng.normal(size=n2)
            arr = mww_array(n1, n2)
            expected = mww_statistic(x, y) - n1 * n2 / 2.0
            assert v1_statistic(arr, rank_permutation(x, y)) == pytest.approx(expected)

    def test_product_single_edge(self):
        c = np.zeros((3, 3))
        c[0, 1] = c[1, 0] = 1.0
        arr = ProductDipsArray(c, c)
        assert v1_statistic(arr, np.arange(3)) == pytest.approx(2.0)

    def test_dense_vs_accessor_loop(self):
        arr = random_dips_array(5, 1.0, seed=11)
        rng = np.random.default_rng(0)
        for _ in range(10):
            pi = rng.permutation(5)
            assert v1_statistic(arr, pi) == pytest.approx(brute_force_v1(arr, pi))

    def test_representations_agree_on_v1(self):
        rng = np.random.default_rng(3)
        edges1 = random_graph_edges(6, 5, seed=1)
        edges2 = random_graph_edges(6, 7, seed=2)
        graph = GraphOverlapArray(edges1, edges2, 6)
        for _ in range(10):
            pi = rng.permutation(6)
            assert graph.v1(pi) == pytest.approx(brute_force_v1(graph, pi))
        mww = MwwDipsArray(2, 3)
        for _ in range(10):
            pi = rng.permutation(5)
            assert mww.v1(pi) == pytest.approx(brute_force_v1(mww, pi))

    def test_malformed_permutation(self):
        arr = mww_array(2, 2)
        with pytest.raises(ValueError):
            v1_statistic(arr, np.array([0, 1, 1, 2]))

    def test_exact_zero_mean(self):
        """Average of V1 over all of S_n vanishes for zero-sum arrays."""
        for arr in (random_dips_array(5, 1.0, seed=2), mww_array(2, 3)):
            total = 0.0
            for pi in itertools.permutations(range(arr.n)):
                total += arr.v1(np.array(pi))
            assert total / math.factorial(arr.n) == pytest.approx(0.0, abs=1e-10)


class TestA2Matrix:
    def test_zero_array(self):
        arr = DenseDipsArray(np.zeros((3, 3, 3, 3)))
        np.testing.assert_allclose(a2_matrix(arr), np.zeros((3, 3)))

    def test_dense_vs_quadruple_sum(self):
        arr = random_dips_array(5, 1.0, seed=9)
        np.testing.assert_allclose(a2_matrix(arr), brute_force_a2(arr), atol=1e-12)

    def test_product_closed_form(self):
        rng = np.random.default_rng(4)
        c = rng.uniform(-1, 1, size=(4, 4))
        d = rng.uniform(-1, 1, size=(4, 4))
        np.fill_diagonal(c, 0.0)
        np.fill_diagonal(d, 0.0)
        arr = ProductDipsArray(c, d)
        expected = np.outer(c.sum(axis=1), d.sum(axis=1)) / 4.0
        np.testing.assert_allclose(a2_matrix(arr), expected, atol=1e-12)
        np.testing.assert_allclose(a2_matrix(arr), brute_force_a2(arr), atol=1e-12)

    def test_mww_closed_form(self):
        arr = mww_array(2, 3)
        np.testing.assert_allclose(a2_matrix(arr), brute_force_a2(arr), atol=1e-12)
        np.testing.assert_allclose(arr.a3(), _brute_force_a3(arr), atol=1e-12)

    def test_entry_bound(self):
        arr = random_dips_array(6, 2.5, seed=1)
        assert np.abs(a2_matrix(arr)).max() <= 2.5 * arr.n + 1e-9


def _brute_force_a3(array):
    n = array.n
    out = np.zeros((n, n))
    for s in range(n):
        for t in range(n):
            out[s, t] = sum(
                float(array.a(i, s, j, t)) for i in range(n) for j in range(n)
            ) / n
    return out


class TestDenseConstruction:
    def test_rejects_nonzero_diagonal(self):
        vals = np.zeros((3, 3, 3, 3))
        vals[1, 1, 0, 2] = 0.5
        with pytest.raises(ValueError, match="zero"):
            DenseDipsArray(vals)

    def test_rejects_nonzero_sum(self):
        vals = np.zeros((3, 3, 3, 3))
        vals[0, 1, 0, 1] = 1.0
        with pytest.raises(ValueError, match="sum"):
            DenseDipsArray(vals)

    def test_center_repairs_sum(self):
        vals = np.zeros((3, 3, 3, 3))
        vals[0, 1, 0, 1] = 1.0
        with pytest.raises(ValueError):
            DenseDipsArray(vals)
        centered = center(vals)
        assert abs(centered.values.sum()) < 1e-12
        # Diagonal cells stay zero through centering.
        assert centered.values[0, 0].max() == 0.0

    def test_size_guard(self):
        with pytest.raises(ResourceLimitError):
            DenseDipsArray(np.zeros((41, 41, 41, 41)))

    def test_declared_bound_checked(self):
        arr = random_dips_array(4, 1.0, seed=5)
        with pytest.raises(ValueError, match="bound"):
            DenseDipsArray(arr.values, sup_bound=0.5)

    def test_random_array_structure(self):
        arr = random_dips_array(5, 1.5, seed=8)
        assert arr.sup_bound == pytest.approx(1.5)
        assert np.abs(arr.values).max() == pytest.approx(1.5)
        assert arr.value_antisymmetric
        assert arr.projections_agree
        assert abs(arr.values.sum()) < 1e-12


class TestCouplingMatrixAndBound:
    def test_lambda_n3(self):
        np.testing.assert_allclose(
            lambda_dips(3).entries,
            [[5.0 / 3.0, -1.0, -1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )

    def test_determinant_formula(self):
        for n in (2, 3, 5, 10, 50):
            det = np.linalg.det(lambda_dips(n).entries)
            assert det == pytest.approx(8.0 * (2 * n - 1) / ((n - 1) ** 3 * n), rel=1e-10)

    def test_remainder(self):
        assert remainder_r1(0.0, 7) == 0.0
        assert remainder_r1(3.0, 4) == pytest.approx(-0.5)
        with pytest.raises(ValueError):
            remainder_r1(1.0, 1)

    def test_eta_phi_pinned(self):
        assert phi_bn(1.0, 10) == pytest.approx(97.432)
        assert eta_bn(1.0, 4) == pytest.approx(2.0 * math.sqrt(113.0 / 16.0))

    def test_bound_values(self):
        assert dips_tail_bound(0.0, 1.0, 10) == 1.0
        t = 2.0
        assert dips_tail_bound(t, 1.0, 10) == pytest.approx(math.exp(-t**2 / (2 * 97.432)))

    def test_nu1_upper_bound_spot(self):
        from concentra.linalg import nu1

        for n in (2, 3, 10, 100):
            assert nu1(lambda_dips(n)) < 2 * n


class TestPairSampler:
    def test_incremental_matches_recompute_dense(self):
        arr = random_dips_array(8, 1.0, seed=3)
        self._check_incremental(arr, seed=11, draws=400)

    def test_incremental_matches_recompute_mww(self):
        self._check_incremental(mww_array(3, 5), seed=5, draws=400)

    def test_incremental_matches_recompute_graph(self):
        arr = GraphOverlapArray(
            random_graph_edges(9, 8, seed=1), random_graph_edges(9, 10, seed=2), 9
        )
        self._check_incremental(arr, seed=6, draws=400)

    @staticmethod
    def _check_incremental(arr, seed, draws):
        """Oracle: full O(n^2) recomputation on the swapped permutation."""
        n = arr.n
        sampler = dips_pair_sampler(arr, seed=seed)
        v, v_prime, i_idx, j_idx = sampler.draw_batch(draws)
        rng = np.random.default_rng(seed)
        perms = rng.permuted(np.tile(np.arange(n), (draws, 1)), axis=1)
        rows = np.arange(draws)
        swapped = perms.copy()
        swapped[rows, i_idx], swapped[rows, j_idx] = perms[rows, j_idx], perms[rows, i_idx]
        np.testing.assert_allclose(v_prime[:, 0], arr.v1_batch(swapped), atol=1e-9)
        pos = np.arange(n)[None, :]
        np.testing.assert_allclose(
            v_prime[:, 1], np.sum(arr.a2_at(pos, swapped), axis=1), atol=1e-9
        )
        np.testing.assert_allclose(
            v_prime[:, 2], np.sum(arr.a3_at(pos, swapped), axis=1), atol=1e-9
        )

    def test_swap_twice_restores(self):
        arr = random_dips_array(6, 1.0, seed=4)
        rng = np.random.default_rng(2)
        pi = rng.permutation(6)
        v = arr.v_vector(pi)
        swapped = pi.copy()
        swapped[[1, 4]] = swapped[[4, 1]]
        swapped[[1, 4]] = swapped[[4, 1]]
        np.testing.assert_allclose(arr.v_vector(swapped), v)

    def test_pathwise_bounds(self):
        arr = random_dips_array(10, 1.0, seed=1)
        sampler = dips_pair_sampler(arr, seed=2)
        v, v_prime, _, _ = sampler.draw_batch(3000)
        b, n = arr.sup_bound, arr.n
        assert np.abs(v[:, 0] - v_prime[:, 0]).max() <= 8 * b * n + 4 * b + 1e-9
        assert np.abs(v[:, 1:] - v_prime[:, 1:]).max() <= 4 * b * n + 1e-9
        w_gap = np.linalg.norm(v - v_prime, axis=1) / n**1.5
        assert w_gap.max() <= eta_bn(b, n) * (1 + 1e-12)

    def test_projection_agreement_on_stream(self):
        arr = random_dips_array(5, 1.0, seed=7)
        sample = next(iter(dips_pair_sampler(arr, seed=1)))
        assert isinstance(sample, DipsPairSample)
        assert sample.v[1] == pytest.approx(sample.v[2])
        assert sample.v_prime[1] == pytest.approx(sample.v_prime[2])

    def test_invariant_violation_rejected(self):
        with pytest.raises(ValueError, match="V1"):
            DipsPairSample(
                np.array([100.0, 0.0, 0.0]), np.array([-100.0, 0.0, 0.0]),
                (0, 1), sup_bound=1.0, n=3,
            )

    def test_group_size_validation(self):
        with pytest.raises(ValueError):
            mww_array(0, 2)
        with pytest.raises(ValueError):
            MwwDipsArray(3, -1)


class TestLinearityWithRemainder:
    def test_dense_random_n4_n5(self):
        """Conditional-mean identity with the printed matrix and remainder."""
        for n, seed in ((4, 21), (5, 22)):
            report = dips_linearity_residual(random_dips_array(n, 1.0, seed=seed))
            assert report.max_residual <= 1e-9

    def test_mww_array_exact(self):
        report = dips_linearity_residual(mww_array(2, 2))
        assert report.max_residual <= 1e-12

    def test_guard(self):
        with pytest.raises(ResourceLimitError):
            dips_linearity_residual(random_dips_array(7, 1.0, seed=0))


class TestMww:
    def test_counting(self):
        assert mww_statistic([1.0, 3.0], [2.0, 4.0]) == 3

    def test_extreme_configuration(self):
        x = np.arange(5, dtype=float)
        y = np.arange(10, 16, dtype=float)
        assert mww_statistic(x, y) == x.size * y.size

    def test_ties_rejected(self):
        with pytest.raises(ValueError, match="tie"):
            mww_statistic([1.0, 2.0], [2.0, 3.0])
        with pytest.raises(ValueError, match="tie"):
            rank_permutation([1.0, 1.0], [2.0])

    def test_bound_is_dips_bound_at_half(self):
        for t in (0.0, 0.3, 1.7):
            for n in (4, 20, 101):
                assert mww_tail_bound(t, n) == dips_tail_bound(t, 0.5, n)

    def test_large_n_closed_form(self):
        arr = mww_array(500, 500)
        rng = np.random.default_rng(0)
        pi = rng.permutation(1000)
        x_ranks = pi[:500]
        y_ranks = pi[500:]
        expected = sum(np.searchsorted(np.sort(x_ranks), y_ranks)) - 500 * 500 / 2.0
        assert arr.v1(pi) == pytest.approx(expected)


class TestGraph:
    def test_single_shared_edge(self):
        edges = [(0, 1)]
        assert graph_overlap_statistic(edges, edges, np.arange(3), 3) == 2
        assert graph_mean(edges, edges, 3) == pytest.approx(2.0 / 3.0)

    def test_empty_second_graph(self):
        edges1 = [(0, 1), (1, 2)]
        for pi in itertools.permutations(range(4)):
            assert graph_overlap_statistic(edges1, [], np.array(pi), 4) == 0

    def test_identical_graphs_identity_perm(self):
        edges = random_graph_edges(10, 12, seed=3)
        assert graph_overlap_statistic(edges, edges, np.arange(10), 10) == 2 * 12

    def test_exhaustive_mean_matches_formula(self):
        """Oracle: enumeration of all 24 permutations of S_4."""
        rng = np.random.default_rng(12)
        for trial in range(5):
            e1 = random_graph_edges(4, int(rng.integers(1, 6)), seed=trial)
            e2 = random_graph_edges(4, int(rng.integers(1, 6)), seed=100 + trial)
            total = sum(
                graph_overlap_statistic(e1, e2, np.array(pi), 4)
                for pi in itertools.permutations(range(4))
            )
            assert total / 24.0 == pytest.approx(graph_mean(e1, e2, 4))

    def test_centered_statistic(self):
        edges = [(0, 1), (2, 3)]
        w1 = graph_centered_w1(edges, edges, np.arange(4), 4)
        assert w1 == pytest.approx((4 - 4.0 * 2 * 2 / 12.0) / 4**1.5)

    def test_bound_uses_b2(self):
        for t in (0.1, 1.0):
            assert graph_tail_bound(t, 25) == dips_tail_bound(t, 2.0, 25)
        assert graph_tail_bound(1.0, 25, b=1.0) == dips_tail_bound(1.0, 1.0, 25)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="loop"):
            GraphOverlapArray([(1, 1)], [], 4)


class TestEdgeListParsing:
    def test_roundtrip(self):
        edges, n = parse_edge_list("1 2\n2 3\n\n# comment\n3 1\n")
        assert n == 3
        assert sorted(map(tuple, edges.tolist())) == [[0, 1], [0, 2], [1, 2]] or \
            sorted(tuple(e) for e in edges.tolist()) == [(0, 1), (0, 2), (1, 2)]

    def test_declared_n(self):
        edges, n = parse_edge_list("1 2\n", n=10)
        assert n == 10 and edges.shape == (1, 2)

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="loop"):
            parse_edge_list("3 3\n")

    def test_rejects_bad_tokens(self):
        with pytest.raises(ValueError):
            parse_edge_list("1 two\n")
        with pytest.raises(ValueError):
            parse_edge_list("1 2 3\n")

    def test_rejects_zero_index(self):
        with pytest.raises(ValueError, match="1-indexed"):
            parse_edge_list("0 2\n")
