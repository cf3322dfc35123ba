import numpy as np
import pytest

from o2bench.core import (
    FusionError,
    GammaSpec,
    GaussianBelief,
    RngStream,
    as_generator,
    fuse_scalar,
    gamma_sample,
    gaussian_sample,
    kf_fuse,
    rmse,
    safe_cholesky,
)


def test_rng_determinism():
    a = RngStream(1, 0).generator().standard_normal(32)
    b = RngStream(1, 0).generator().standard_normal(32)
    assert np.array_equal(a, b)


def test_rng_streams_differ_and_children_are_stable():
    a = RngStream(1, 0).generator().standard_normal(1000)
    b = RngStream(1, 1).generator().standard_normal(1000)
    assert not np.array_equal(a, b)
    # stream correlation should be noise-level
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1
    c1 = RngStream(7).child("truth", 3)
    c2 = RngStream(7).child("truth", 3)
    assert c1 == c2
    assert RngStream(7).child("truth", 4) != c1


def test_gaussian_sample_degenerate_and_moments():
    belief = GaussianBelief([0.0], [[0.0]])
    x = gaussian_sample(belief, RngStream(0))
    assert x[0] == 0.0
    draws = gaussian_sample(GaussianBelief([0.0], [[1.0]]), RngStream(3), size=1_000_000)
    assert abs(draws.mean()) < 4e-3
    assert abs(draws.var() - 1.0) < 0.01


def test_gaussian_sample_rejects_indefinite():
    with pytest.raises(ValueError):
        GaussianBelief([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])  # eigenvalues -1, 3
    with pytest.raises(ValueError):
        safe_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_safe_cholesky_semidefinite_fallback():
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])  # rank 1
    L = safe_cholesky(cov)
    assert np.allclose(L @ L.T, cov, atol=1e-12)


def test_gamma_spec_moments():
    spec = GammaSpec(3.0, 2.0)
    assert spec.mean == 1.5
    assert spec.variance == 0.75
    with pytest.raises(ValueError):
        GammaSpec(0.0, 1.0)


def test_gamma_sample_paper_moments():
    draws = gamma_sample(GammaSpec(3.0, 2.0), RngStream(5), size=1_000_000)
    assert abs(draws.mean() - 1.5) < 0.01
    assert abs(draws.var() - 0.75) < 0.02
    assert np.all(draws > 0)


def test_gamma_sample_exponential_tail():
    # shape=1, rate=1 is exponential(1): P(X > 1) = 1/e
    draws = gamma_sample(GammaSpec(1.0, 1.0), RngStream(6), size=1_000_000)
    assert abs(np.mean(draws > 1.0) - np.exp(-1.0)) < 0.005


def _g1(mean, var):
    return GaussianBelief([mean], [[var]])


def test_kf_fuse_paper_examples():
    z = kf_fuse(_g1(0.0, 400.0), _g1(0.0, 100.0))
    assert z.mean[0] == pytest.approx(0.0, abs=1e-12)
    assert z.cov[0, 0] == pytest.approx(80.0, rel=1e-12)
    z = kf_fuse(_g1(0.0, 400.0), _g1(50.0, 100.0))
    assert z.mean[0] == pytest.approx(40.0, rel=1e-12)
    assert z.cov[0, 0] == pytest.approx(80.0, rel=1e-12)
    z = kf_fuse(_g1(3.0, 2.0), _g1(3.0, 2.0))
    assert z.mean[0] == pytest.approx(3.0)
    assert z.cov[0, 0] == pytest.approx(1.0)


def test_kf_fuse_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        mx, my = rng.normal(0, 10, 2)
        vx, vy = rng.uniform(0.01, 100, 2)
        m1, v1 = fuse_scalar(mx, vx, my, vy)
        m2, v2 = fuse_scalar(my, vy, mx, vx)
        assert abs(m1 - m2) <= 1e-12 * max(1.0, abs(m1))
        assert abs(v1 - v2) <= 1e-12 * v1
        assert v1 <= min(vx, vy) + 1e-12
        assert min(mx, my) - 1e-12 <= m1 <= max(mx, my) + 1e-12


def test_kf_fuse_inconsistent():
    with pytest.raises(FusionError):
        fuse_scalar(0.0, 0.0, 1.0, 0.0)


def test_rmse_modes():
    truth = np.array([[2.0, -4.0]])
    est = np.array([[5.0, 4.0]])
    out = rmse(truth, est)
    assert out[0] == pytest.approx(3.0)
    assert out[1] == pytest.approx(8.0)
    assert rmse(truth, est, "absolute")[1] == pytest.approx(0.0)
    assert np.all(rmse(truth, truth) == 0.0)
    with pytest.raises(ValueError):
        rmse(truth, est[:, :1])
    with pytest.raises(ValueError):
        rmse(truth, est, "bogus")


def test_as_generator_passthrough():
    gen = RngStream(0).generator()
    assert as_generator(gen) is gen
    with pytest.raises(TypeError):
        as_generator(42)
