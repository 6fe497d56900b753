import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vimp.datagen import (DataSpec, Dataset, from_arrays, generate, generate_pair, make_transform,
                          permute_column, theoretical_covariance)
from vimp.errors import IndexOutOfRangeError, InvalidParameterError


def _sample_moments_ok(x, delta):
    """Diagonal and off-diagonal sample covariances within 3 SE of the latent-model values."""
    n, p = x.shape
    var_th = 1 + (p - 1) * delta**2
    cov_th = 2 * delta + (p - 2) * delta**2
    xc = x - x.mean(axis=0)
    for i in range(p):
        for j in range(i, p):
            prod = xc[:, i] * xc[:, j]
            se = prod.std(ddof=1) / np.sqrt(n)
            target = var_th if i == j else cov_th
            if abs(prod.mean() - target) > 3 * se:
                return False
    return True


class TestMakeTransform:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(make_transform(3, 0.0), np.eye(3))

    def test_two_by_two(self):
        np.testing.assert_array_equal(make_transform(2, 0.5), [[1.0, 0.5], [0.5, 1.0]])

    def test_strong_collinearity(self):
        a = make_transform(3, 0.99)
        np.testing.assert_array_equal(np.diag(a), np.ones(3))
        assert np.all(a[~np.eye(3, dtype=bool)] == 0.99)

    @pytest.mark.parametrize("p,delta", [(1, 0.5), (3, -0.1), (3, 1.0), (2.5, 0.1)])
    def test_rejects(self, p, delta):
        with pytest.raises(InvalidParameterError):
            make_transform(p, delta)

    @given(st.integers(2, 15), st.floats(0.0, 0.999))
    def test_covariance_closed_form(self, p, delta):
        a = make_transform(p, delta)
        np.testing.assert_allclose(theoretical_covariance(p, delta), a @ a.T, rtol=1e-12, atol=1e-14)


class TestDataSpec:
    def test_uniform(self):
        spec = DataSpec.uniform(10, 4, 0.2, 2.0)
        assert spec.beta == (2.0, 2.0, 2.0, 2.0)

    @pytest.mark.parametrize("kwargs", [
        dict(n=0, p=2, delta=0.1, beta=(1, 1)),
        dict(n=5, p=2, delta=0.1, beta=(1,)),
        dict(n=5, p=2, delta=0.1, beta=(1, 1), noise_var=0.0),
        dict(n=5, p=2, delta=0.1, beta=(1, float("nan"))),
        dict(n=5, p=2, delta=0.1, beta=(1, 1), seed=-1),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            DataSpec(**kwargs)


class TestGenerate:
    def test_shapes_and_readonly(self):
        data = generate(DataSpec.uniform(7, 3, 0.2))
        assert data.x.shape == (7, 3) and data.y.shape == (7,)
        with pytest.raises(ValueError):
            data.x[0, 0] = 1.0

    def test_zero_coefficients_negligible_noise(self):
        data = generate(DataSpec(n=4, p=2, delta=0.0, beta=(0.0, 0.0), noise_var=1e-12))
        assert np.all(np.abs(data.y) < 1e-5)

    def test_deterministic(self):
        spec = DataSpec.uniform(50, 3, 0.4, seed=9)
        a, b = generate(spec), generate(spec)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_large_sample_moments(self):
        data = generate(DataSpec.uniform(100_000, 3, 0.5, 1.0, 0.1, seed=3))
        assert _sample_moments_ok(data.x, 0.5)
        np.testing.assert_allclose(data.x.var(axis=0).mean(), 1.5, rtol=0.02)
        cov = np.cov(data.x, rowvar=False)
        np.testing.assert_allclose(cov[0, 1], 1.25, rtol=0.03)

    def test_noise_is_a_variance(self):
        spec = DataSpec.uniform(200_000, 2, 0.3, 1.0, 0.25, seed=4)
        data = generate(spec)
        resid = data.y - data.x @ np.asarray(spec.beta)
        np.testing.assert_allclose(resid.var(), 0.25, rtol=0.02)


class TestGeneratePair:
    def test_same_seed_same_pair(self):
        spec = DataSpec.uniform(30, 3, 0.3, seed=7)
        (t1, v1), (t2, v2) = generate_pair(spec), generate_pair(spec)
        np.testing.assert_array_equal(t1.x, t2.x)
        np.testing.assert_array_equal(v1.y, v2.y)

    @pytest.mark.parametrize("n", [1, 2, 10, 500])
    def test_train_and_valid_differ(self, n):
        train, valid = generate_pair(DataSpec.uniform(n, 3, 0.3, seed=n))
        assert not np.array_equal(train.x, valid.x)

    def test_both_members_have_model_moments(self):
        train, valid = generate_pair(DataSpec.uniform(2000, 6, 0.33, seed=11))
        assert _sample_moments_ok(train.x, 0.33)
        assert _sample_moments_ok(valid.x, 0.33)


class TestPermuteColumn:
    def test_singleton_unchanged(self):
        data = from_arrays([[1.0, 2.0]], [3.0])
        np.testing.assert_array_equal(permute_column(data, 0, 1).x, data.x)

    @given(st.integers(1, 60), st.integers(2, 6), st.integers(0, 2**32), st.data())
    def test_locality_and_multiset(self, n, p, seed, draw):
        i = draw.draw(st.integers(0, p - 1))
        data = generate(DataSpec.uniform(n, p, 0.4, seed=seed))
        out = permute_column(data, i, seed)
        np.testing.assert_array_equal(np.sort(out.x[:, i]), np.sort(data.x[:, i]))
        others = [j for j in range(p) if j != i]
        np.testing.assert_array_equal(out.x[:, others], data.x[:, others])
        np.testing.assert_array_equal(out.y, data.y)

    def test_does_not_mutate_input(self):
        data = generate(DataSpec.uniform(20, 3, 0.4))
        before = data.x.copy()
        permute_column(data, 1, 3)
        np.testing.assert_array_equal(data.x, before)

    @pytest.mark.parametrize("i", [-1, 3])
    def test_index_out_of_range(self, i):
        with pytest.raises(IndexOutOfRangeError):
            permute_column(generate(DataSpec.uniform(5, 3, 0.1)), i, 0)


class TestDataset:
    def test_shape_validation(self):
        with pytest.raises(InvalidParameterError):
            Dataset(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(InvalidParameterError):
            Dataset(np.zeros(3), np.zeros(3))

    def test_drop_column(self):
        data = from_arrays([[1, 2, 3], [4, 5, 6]], [0, 1])
        np.testing.assert_array_equal(data.drop_column(1).x, [[1, 3], [4, 6]])
