import math

import numpy as np
import pytest

from o2bench.core import GaussianBelief, RngStream, rmse
from o2bench.filters import (
    ParticleSet,
    UnscentedParams,
    ekf_step,
    init_particles,
    kalman_step,
    pf_step,
    resample,
    systematic_resample_indices,
    ukf_step,
    unscented_transform,
)
from o2bench.models import model_a, model_b, ungm
from o2bench.bench.estimators import run_estimator


def _g1(mean, var):
    return GaussianBelief([mean], [[var]])


# ---------------------------------------------------------------- resampling

def test_resample_uniform_weights_preserved():
    ps = ParticleSet(np.arange(6.0), np.full(6, 1 / 6))
    out = resample(ps, RngStream(0))
    assert np.allclose(out.weights, 1 / 6)
    assert out.ess() == pytest.approx(6.0)
    # with equal weights systematic resampling keeps each particle exactly once
    assert sorted(out.particles.tolist()) == list(range(6))


def test_resample_half_half():
    ps = ParticleSet(np.array([1.0, 2.0, 3.0, 4.0]), np.array([0.5, 0.5, 0.0, 0.0]))
    counts = np.zeros(4)
    for i in range(2000):
        out = resample(ps, RngStream(1).child(i))
        for k in range(4):
            counts[k] += np.sum(out.particles == k + 1.0)
    counts /= 2000
    assert counts[2] == 0 and counts[3] == 0
    assert counts[0] == pytest.approx(2.0, abs=0.02)
    assert counts[1] == pytest.approx(2.0, abs=0.02)


def test_resample_single_winner():
    ps = ParticleSet(np.array([5.0, 7.0, 9.0]), np.array([0.0, 1.0, 0.0]))
    out = resample(ps, RngStream(2))
    assert np.all(out.particles == 7.0)


def test_resample_unbiasedness_bound():
    # E[count_n] = N w_n within 4 binomial standard errors over 1e5 trials
    weights = np.array([0.05, 0.1, 0.15, 0.2, 0.5])
    n = len(weights)
    trials = 100_000
    gen = RngStream(3).generator()
    counts = np.zeros(n)
    for _ in range(trials):
        idx = systematic_resample_indices(weights, gen)
        counts += np.bincount(idx, minlength=n)
    mean_counts = counts / trials
    for k in range(n):
        bound = 4 * math.sqrt(n * weights[k] * (1 - weights[k]) / trials)
        assert abs(mean_counts[k] - n * weights[k]) <= bound


# ------------------------------------------------------- unscented transform

def test_ut_identity_and_hand_example():
    m, c, _ = unscented_transform([1.5], [[2.0]], lambda x: x)
    assert m[0] == pytest.approx(1.5, abs=1e-10)
    assert c[0, 0] == pytest.approx(2.0, abs=1e-10)
    # N(0,1) through x^2 with (alpha, beta, kappa) = (1, 0, 2): mean is exactly 1
    m, _, _ = unscented_transform([0.0], [[1.0]], lambda x: x**2, UnscentedParams(1.0, 0.0, 2.0))
    assert m[0] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_ut_affine_exactness(dim):
    rng = np.random.default_rng(dim)
    for _ in range(5):
        A = rng.normal(size=(dim, dim))
        b = rng.normal(size=dim)
        mean = rng.normal(size=dim)
        sq = rng.normal(size=(dim, dim))
        cov = sq @ sq.T + dim * np.eye(dim)
        m, c, cxy = unscented_transform(mean, cov, lambda x: A @ x + b)
        assert np.allclose(m, A @ mean + b, atol=1e-10)
        assert np.allclose(c, A @ cov @ A.T, atol=1e-10)
        assert np.allclose(cxy, cov @ A.T, atol=1e-10)


# ----------------------------------------------------------- gaussian filters

def test_kalman_uninformative_observation():
    m = model_b(obs_var=1e12)
    b = kalman_step(_g1(2.0, 1.0), 0.0, 5, m)
    predicted = m.transition(2.0, 5, None)
    assert b.mean[0] == pytest.approx(predicted, rel=1e-6)


def test_kalman_exact_when_noise_free():
    m = model_b(obs_var=1e-12, process_var=1e-12)
    x = 3.0
    b = _g1(3.0, 1e-12)
    for t in range(2, 10):
        x = m.transition(x, t, None)
        y = m.observe(x, t, None)
        b = kalman_step(b, y, t, m)
        assert b.mean[0] == pytest.approx(x, abs=1e-6)


def test_kalman_requires_linear():
    with pytest.raises(ValueError):
        kalman_step(_g1(0.0, 1.0), 0.0, 2, ungm())


def test_ekf_and_ukf_match_kf_on_linear_model():
    m = model_b(obs_var=1.0)
    xs_rng = RngStream(4).generator()
    b_kf = b_ekf = b_ukf = _g1(1.0, m.init_var)
    x = 1.0
    for t in range(2, 102):
        x = m.transition(x, t, xs_rng)
        y = float(m.observe(x, t, xs_rng))
        b_kf = kalman_step(b_kf, y, t, m)
        b_ekf = ekf_step(b_ekf, y, t, m)
        b_ukf = ukf_step(b_ukf, y, t, m)
        assert b_ekf.mean[0] == pytest.approx(b_kf.mean[0], abs=1e-10)
        assert b_ekf.cov[0, 0] == pytest.approx(b_kf.cov[0, 0], abs=1e-10)
        assert b_ukf.mean[0] == pytest.approx(b_kf.mean[0], abs=1e-8)
        assert b_ukf.cov[0, 0] == pytest.approx(b_kf.cov[0, 0], abs=1e-8)


# ----------------------------------------------------------- particle filters

def test_pf_flat_likelihood_keeps_weights():
    m = model_b(obs_var=1e12)  # likelihood effectively constant in x
    ps = ParticleSet(np.linspace(-1, 1, 50), np.full(50, 0.02))
    out, info = pf_step(ps, 0.0, 3, m, "sir", RngStream(5))
    assert np.allclose(out.weights, 0.02, atol=1e-6)
    assert not info.degeneracy


def test_pf_degeneracy_flag_and_reset():
    m = model_a()  # obs noise 1e-5: a scan far from every particle underflows
    ps = ParticleSet(np.full(100, 3.0), np.full(100, 0.01))
    out, info = pf_step(ps, 1e6, 5, m, "sir", RngStream(6))
    assert info.degeneracy
    assert out.weights.sum() == pytest.approx(1.0)


def test_ess_after_resample_equals_n():
    ps = ParticleSet(np.arange(10.0), np.linspace(1, 5, 10))
    out = resample(ps.normalized(), RngStream(7))
    assert out.ess() == pytest.approx(10.0)


@pytest.mark.parametrize("variant", ["sir", "apf", "gpf", "ekpf", "ukpf"])
def test_pf_variants_track_linear_model(variant):
    # every variant should track the easy linear model to well under the
    # prior spread
    m = model_b(obs_var=0.05)
    base = RngStream(8)
    truths, ests = [], []
    for i in range(20):
        gen = base.child("truth", i).generator()
        x = 1.0
        xs, ys = [x], [float(m.observe(x, 1, gen))]
        for t in range(2, 41):
            x = float(m.transition(x, t, gen))
            xs.append(x)
            ys.append(float(m.observe(x, t, gen)))
        res = run_estimator(variant, m, np.array(ys), np.array(xs), base.child(variant, i), 200)
        truths.append(xs)
        ests.append(res.estimates)
    series = rmse(np.array(truths), np.array(ests))
    assert series.mean() < 0.5


def test_sir_ungm_paper_anchor():
    # Table II anchor: SIR with 100 particles on the UNGM, 100 runs
    m = ungm()
    base = RngStream(9)
    truths, ests = [], []
    for i in range(100):
        gen = base.child("truth", i).generator()
        from o2bench.models import simulate

        xs, ys = simulate(m, 100, None, gen)
        res = run_estimator("sir", m, ys, xs, base.child("sir", i), 100)
        truths.append(xs)
        ests.append(res.estimates)
    mean_rmse = rmse(np.array(truths), np.array(ests)).mean()
    assert 2.95 <= mean_rmse <= 4.95  # 3.951 +/- 1


def test_init_particles_covs():
    ps = init_particles(model_a(), 1.0, 64, RngStream(10), "ekpf")
    assert ps.covs is not None and np.all(ps.covs == model_a().init_var)
    ps = init_particles(model_a(), 1.0, 64, RngStream(10), "sir")
    assert ps.covs is None


def test_particle_set_validation():
    with pytest.raises(ValueError):
        ParticleSet(np.array([1.0]), np.array([-0.5]))
    with pytest.raises(ValueError):
        ParticleSet(np.empty(0), np.empty(0))
