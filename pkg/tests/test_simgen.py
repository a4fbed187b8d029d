import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from stdfpure.chi import empirical_chi, population_chi, preasymptotic_chi_maxlinear
from stdfpure.errors import GenerationError, InputError, ParameterError
from stdfpure.hyperparams import pure_partition, signal_strength, sparsity_index
from stdfpure.simgen import (
    ModelSpec,
    gen_loading_matrix,
    raw_loading,
    sample_dataset,
    sample_pareto,
    tail_loading,
)


class TestLoadingMatrix:
    def test_square_is_identity(self):
        a = gen_loading_matrix(ModelSpec("linear", False, 6, 6, 0.2, 3), 0)
        assert_array_equal(a.values, np.eye(6))

    def test_row_after_identity_has_s_nonzeros(self):
        a = gen_loading_matrix(ModelSpec("linear", False, 6, 5, 0.2, 4), 1)
        assert np.count_nonzero(a.values[5]) == 4

    @pytest.mark.parametrize("seed", range(15))
    def test_structure(self, seed):
        spec = ModelSpec("linear", True, 60, 6, 0.15, 4)
        a = gen_loading_matrix(spec, seed).values
        assert_array_equal(a[:6], np.eye(6))
        assert_allclose(a.sum(axis=1), 1.0, atol=1e-12)
        assert sparsity_index(a) == 4
        assert signal_strength(a) >= 0.15 - 1e-12
        assert all(pure_partition(a))
        inner = a[(a > 0) & (a < 1)]
        assert np.all((inner >= 0.15) & (inner <= 0.85))

    def test_seed_determinism(self):
        spec = ModelSpec("max_linear", True, 40, 5, 0.2, 3)
        assert_array_equal(gen_loading_matrix(spec, 9).values, gen_loading_matrix(spec, 9).values)
        assert not np.array_equal(gen_loading_matrix(spec, 9).values, gen_loading_matrix(spec, 10).values)

    def test_growing_d_keeps_earlier_rows(self):
        small = gen_loading_matrix(ModelSpec("linear", False, 20, 4, 0.2, 3), 5).values
        big = gen_loading_matrix(ModelSpec("linear", False, 50, 4, 0.2, 3), 5).values
        assert_array_equal(big[:20], small)

    def test_infeasible(self):
        with pytest.raises(GenerationError, match="eta=0.3"):
            gen_loading_matrix(ModelSpec("linear", False, 8, 4, 0.3, 4), 0)

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            ModelSpec("linear", False, 5, 6, 0.2, 2)
        with pytest.raises(ParameterError):
            ModelSpec("linear", False, 5, 3, 0.2, 4)
        with pytest.raises(ParameterError):
            ModelSpec("sum", False, 5, 3, 0.2, 2)


class TestPareto:
    def test_survival_at_two(self):
        z = sample_pareto(1.0, 10**6, 0)
        assert np.mean(z > 2) == pytest.approx(0.5, abs=0.002)

    def test_support(self):
        assert np.all(sample_pareto(0.7, 10**5, 1) >= 1.0)

    def test_mean_alpha_two(self):
        assert np.mean(sample_pareto(2.0, 10**6, 2)) == pytest.approx(2.0, abs=0.05)

    def test_bad_alpha(self):
        with pytest.raises(ParameterError):
            sample_pareto(0.0, 3, 0)


class TestDataset:
    @pytest.mark.parametrize("kind", ["linear", "max_linear"])
    def test_identity_columns_are_pareto(self, kind):
        spec = ModelSpec(kind, False, 3, 3, 0.2, 1, factor_alpha=1.5)
        X = sample_dataset(np.eye(3), spec, 10**5, 4).values
        for col in X.T:
            ks = stats.kstest(col, lambda x: 1 - np.clip(x, 1, None) ** -1.5).statistic
            assert ks < 0.01

    def test_pure_row_copies_factor(self):
        spec = ModelSpec("max_linear", False, 4, 2, 0.2, 2)
        A = np.array([[1.0, 0.0], [0.0, 1.0], [0.4, 0.6], [1.0, 0.0]])
        X = sample_dataset(A, spec, 500, 3).values
        assert_array_equal(X[:, 0], X[:, 3])

    @pytest.mark.parametrize("kind", ["linear", "max_linear"])
    def test_positive(self, kind):
        spec = ModelSpec(kind, True, 20, 4, 0.2, 3)
        a = gen_loading_matrix(spec, 0)
        assert np.all(sample_dataset(a, spec, 2000, 1).values > 0)

    def test_seed_determinism(self):
        spec = ModelSpec("linear", True, 20, 4, 0.2, 3)
        a = gen_loading_matrix(spec, 0)
        assert_array_equal(sample_dataset(a, spec, 100, 5).values, sample_dataset(a, spec, 100, 5).values)

    def test_noise_toggle_keeps_factors(self):
        noisy = ModelSpec("max_linear", True, 3, 3, 0.2, 1)
        clean = ModelSpec("max_linear", False, 3, 3, 0.2, 1)
        Xn = sample_dataset(np.eye(3), noisy, 400, 8).values
        Xc = sample_dataset(np.eye(3), clean, 400, 8).values
        assert np.all(Xn >= Xc)

    def test_shape_mismatch(self):
        spec = ModelSpec("linear", False, 4, 2, 0.2, 2)
        with pytest.raises(InputError):
            sample_dataset(np.eye(3), spec, 10, 0)

    @staticmethod
    def _envelope_check(chi_hat, a, n, k):
        chi = population_chi(a).values
        t = n / k
        chi_t = preasymptotic_chi_maxlinear(a, t).values
        # exceedance counts are close to Poisson with mean k * chi_t
        se = np.sqrt(np.clip(chi_t, 1 / k, None) / k)
        off = ~np.eye(len(chi), dtype=bool)
        assert np.all((np.abs(chi_hat - chi) <= (1 - chi) / t + 4 * se)[off])
        return chi_t, se, off

    def test_frechet_max_linear_chi_within_bias_envelope(self):
        spec = ModelSpec("max_linear", False, 12, 4, 0.2, 3)
        a = gen_loading_matrix(spec, 6)
        n = 10**5
        k = int(np.sqrt(n) * 10)
        rng = np.random.default_rng(6)
        Z = -1.0 / np.log(rng.random((n, 4)))  # unit Frechet
        X = np.max(Z[:, None, :] * a.values[None, :, :], axis=2)
        chi_hat = empirical_chi(X, k, 6).values
        chi_t, se, off = self._envelope_check(chi_hat, a, n, k)
        assert np.all((np.abs(chi_hat - chi_t) <= 4 * se)[off])

    def test_pareto_max_linear_chi_within_bias_envelope(self):
        spec = ModelSpec("max_linear", False, 12, 4, 0.2, 3)
        a = gen_loading_matrix(spec, 6)
        n = 10**5
        k = int(np.sqrt(n) * 10)
        chi_hat = empirical_chi(sample_dataset(a, spec, n, 6), k, 6).values
        self._envelope_check(chi_hat, a, n, k)


class TestTailLoading:
    def test_alpha_one_is_identity_on_row_stochastic(self):
        a = gen_loading_matrix(ModelSpec("linear", False, 15, 4, 0.2, 3), 2)
        assert_allclose(tail_loading(a.values, 1.0).values, a.values, atol=1e-15)

    def test_round_trip(self):
        a = gen_loading_matrix(ModelSpec("linear", False, 15, 4, 0.2, 3), 2)
        for alpha in (0.5, 2.0, 3.0):
            assert_allclose(tail_loading(raw_loading(a, alpha), alpha).values, a.values, atol=1e-12)

    def test_alpha_changes_tail_loading(self):
        raw = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 3.0]])
        assert_allclose(tail_loading(raw, 2.0).values[2], [0.1, 0.9])
