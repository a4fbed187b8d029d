import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from stdfpure.chi import (
    ChiMatrix,
    DataMatrix,
    LoadingMatrix,
    compute_ranks,
    empirical_chi,
    population_chi,
    preasymptotic_chi_maxlinear,
    stdf_eval,
)
from stdfpure.errors import InputError, ParameterError
from stdfpure.simgen import ModelSpec, gen_loading_matrix

THREE_ROW = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]


def chi_double_loop(x, k):
    """Brute-force bivariate oracle: ranks by counting, then pairwise indicator sums."""
    n = len(x)
    ranks = np.zeros((n, 2), dtype=int)
    for c in range(2):
        for i in range(n):
            ranks[i, c] = sum(1 for m in range(n) if x[m, c] <= x[i, c])
    hits = 0
    for i in range(n):
        if ranks[i, 0] > n - k and ranks[i, 1] > n - k:
            hits += 1
    return hits / k


def random_loading(rng, d, K):
    a = rng.random((d, K)) * (rng.random((d, K)) < 0.6)
    a[np.arange(d), rng.integers(0, K, d)] += 0.1
    a[:K, :K] += np.eye(K)  # every column has mass
    return a / a.sum(axis=1, keepdims=True)


class TestRanks:
    def test_increasing_column(self):
        r = compute_ranks(np.array([[0.1, 0.2], [0.4, 0.8], [0.7, 0.3], [0.9, 0.6]]))
        assert_array_equal(r.ranks[:, 0], [1, 2, 3, 4])
        assert_array_equal(r.ranks[:, 1], [1, 4, 2, 3])

    def test_ties_reach_both_orders(self):
        x = np.array([[5.0, 1.0], [5.0, 2.0]])
        seen = {tuple(compute_ranks(x, seed).ranks[:, 0]) for seed in range(50)}
        assert seen == {(1, 2), (2, 1)}

    def test_deterministic_given_seed(self):
        x = np.random.default_rng(0).integers(0, 3, (40, 3)).astype(float)
        assert_array_equal(compute_ranks(x, 11).ranks, compute_ranks(x, 11).ranks)

    def test_columns_are_permutations(self):
        x = np.random.default_rng(1).integers(0, 4, (30, 5)).astype(float)
        r = compute_ranks(x, 2).ranks
        for col in r.T:
            assert_array_equal(np.sort(col), np.arange(1, 31))

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            compute_ranks(np.array([[1.0, np.nan], [2.0, 3.0]]))

    def test_data_matrix_shape(self):
        dm = DataMatrix(np.zeros((5, 3)))
        assert (dm.n, dm.d) == (5, 3)
        with pytest.raises(InputError):
            DataMatrix(np.zeros((1, 3)))


class TestEmpiricalChi:
    def test_comonotone_pair(self):
        x = np.random.default_rng(3).random(100)
        data = np.column_stack([x, np.exp(3 * x)])
        for k in (1, 7, 50, 100):
            assert empirical_chi(data, k).values[0, 1] == 1.0

    def test_hand_example(self):
        data = np.array([[0.1, 0.2], [0.4, 0.8], [0.7, 0.3], [0.9, 0.6]])
        chi = empirical_chi(data, 2)
        # top-2 rows are {3, 4} in column 1 and {2, 4} in column 2: one shared
        assert chi.values[0, 1] == 0.5
        assert chi.k_used == 2

    def test_diagonal_is_one(self):
        chi = empirical_chi(np.random.default_rng(0).random((50, 4)), 5)
        assert_array_equal(np.diag(chi.values), np.ones(4))

    @pytest.mark.parametrize("k", [0, 51, 2.5])
    def test_k_out_of_range(self, k):
        with pytest.raises(ParameterError):
            empirical_chi(np.random.default_rng(0).random((50, 2)), k)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(2, 200), seed=st.integers(0, 2**32 - 1), data=st.data())
    def test_matches_double_loop(self, n, seed, data):
        k = data.draw(st.integers(1, n))
        x = np.random.default_rng(seed).standard_normal((n, 2))
        x[:, 1] += x[:, 0] * data.draw(st.floats(-1, 3))
        assert empirical_chi(x, k).values[0, 1] == pytest.approx(chi_double_loop(x, k), abs=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 60))
    def test_type_invariants(self, seed, k):
        x = np.random.default_rng(seed).pareto(1.0, (60, 6))
        chi = empirical_chi(x, k, seed)
        v = chi.values
        assert_array_equal(v, v.T)
        assert np.all((v >= 0) & (v <= 1))
        assert np.max(np.abs(k * v - np.round(k * v))) <= 1e-9

    def test_rank_invariance_bit_identical(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((300, 5))
        y = x.copy()
        y[:, 0] = np.exp(y[:, 0])
        y[:, 2] = y[:, 2] ** 3
        y[:, 4] = 2.0 * y[:, 4] + 7.0
        assert_array_equal(empirical_chi(x, 30, 9).values, empirical_chi(y, 30, 9).values)


class TestPopulationChi:
    def test_identity(self):
        v = population_chi(np.eye(2)).values
        assert v[0, 1] == 0.0

    def test_identical_rows(self):
        v = population_chi([[0.3, 0.7], [0.3, 0.7]]).values
        assert v[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_three_row_example(self):
        v = population_chi(THREE_ROW).values
        assert v[0, 1] == 0.0
        assert v[0, 2] == 0.5
        assert v[1, 2] == 0.5
        assert population_chi(THREE_ROW).k_used == 0

    def test_loading_invariants_enforced(self):
        with pytest.raises(InputError):
            LoadingMatrix([[0.5, 0.4]])
        with pytest.raises(InputError):
            LoadingMatrix([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(InputError):
            LoadingMatrix([[1.5, -0.5]])


class TestStdf:
    def test_unit_vectors(self):
        a = random_loading(np.random.default_rng(0), 6, 3)
        for j in range(6):
            assert stdf_eval(a, np.eye(6)[j]) == pytest.approx(1.0, abs=1e-12)

    def test_identity_all_ones(self):
        assert stdf_eval(np.eye(5), np.ones(5)) == 5.0

    def test_three_row_example(self):
        assert stdf_eval(THREE_ROW, [1, 1, 1]) == 2.0

    def test_negative_rejected(self):
        with pytest.raises(InputError):
            stdf_eval(THREE_ROW, [1, -1, 1])

    def test_pair_chi_relation(self):
        # chi(j, l) = 2 - L(e_j + e_l) for a max-linear stdf
        a = random_loading(np.random.default_rng(1), 5, 3)
        chi = population_chi(a).values
        for j in range(5):
            for l in range(5):
                if j != l:
                    x = np.zeros(5)
                    x[[j, l]] = 1.0
                    assert chi[j, l] == pytest.approx(2 - stdf_eval(a, x), abs=1e-12)


class TestPreasymptotic:
    def test_identical_rows_give_one(self):
        a = [[0.3, 0.7], [0.3, 0.7], [1.0, 0.0]]
        for t in (1.5, 2.0, 10.0, 1e4):
            assert preasymptotic_chi_maxlinear(a, t).values[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_identity_t2(self):
        assert preasymptotic_chi_maxlinear(np.eye(2), 2.0).values[0, 1] == pytest.approx(0.5, abs=1e-15)

    def test_large_t_limit(self):
        a = random_loading(np.random.default_rng(2), 8, 3)
        assert_allclose(preasymptotic_chi_maxlinear(a, 1e6).values, population_chi(a).values, atol=1e-5)

    @pytest.mark.parametrize("t", [1.0, 0.5, np.inf])
    def test_bad_t(self, t):
        with pytest.raises(ParameterError):
            preasymptotic_chi_maxlinear(np.eye(2), t)

    @pytest.mark.parametrize("t", [2.0, 10.0, 100.0])
    def test_bias_envelope(self, t):
        rng = np.random.default_rng(int(t))
        for _ in range(10):
            a = random_loading(rng, 7, 4)
            chi = population_chi(a).values
            diff = np.abs(preasymptotic_chi_maxlinear(a, t).values - chi)
            assert np.all(diff <= (1 - chi) / t + 1e-12)

    def test_bias_envelope_generated(self):
        spec = ModelSpec("max_linear", False, 15, 4, 0.2, 3)
        a = gen_loading_matrix(spec, 4)
        chi = population_chi(a).values
        for t in (2.0, 10.0, 100.0):
            diff = np.abs(preasymptotic_chi_maxlinear(a, t).values - chi)
            assert np.all(diff <= (1 - chi) / t + 1e-12)


def test_chi_matrix_validation():
    with pytest.raises(InputError):
        ChiMatrix([[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(InputError):
        ChiMatrix([[0.9, 0.2], [0.2, 1.0]])
    with pytest.raises(InputError):
        ChiMatrix([[1.0, 0.25], [0.25, 1.0]], k_used=3)
