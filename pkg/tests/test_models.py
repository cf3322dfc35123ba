import math

import numpy as np
import pytest

from o2bench.core import RngStream
from o2bench.models import (
    GhostObsParams,
    invert_observation,
    make_model,
    model_a,
    model_b,
    simulate,
    ungm,
)


def test_model_a_noiseless_recursion():
    m = model_a()
    x2 = m.transition(1.0, 2, None)
    assert x2 == pytest.approx(1.0 + math.sin(0.04 * math.pi * 2) + 0.5, abs=1e-12)


def test_ungm_noiseless_recursion():
    m = ungm()
    x2 = m.transition(0.0, 2, None)
    assert x2 == pytest.approx(8 * math.cos(1.2), abs=1e-9)
    assert x2 == pytest.approx(2.899, abs=1e-3)


def test_model_b_observation():
    m = model_b()
    assert m.observe(4.0, 7, None) == pytest.approx(0.0, abs=1e-12)


def test_inversions():
    mc = ungm()
    assert sorted(mc.invert(5.0, 3)) == [-10.0, 10.0]
    ma = model_a()
    assert ma.invert(1.0, 40) == (6.0,)
    assert sorted(ma.invert(0.2 * 9, 10)) == [-3.0, 3.0]
    # noise-driven negative radicand clamps to the zero candidate
    assert mc.invert(-0.3, 5) == (0.0,)


def test_observation_branch_switch():
    m = model_a()
    assert m.observe(2.0, 30, None) == pytest.approx(0.2 * 4.0)
    assert m.observe(2.0, 31, None) == pytest.approx(0.5 * 2.0 - 2.0)
    assert len(m.invert(0.8, 30)) == 2
    assert len(m.invert(0.8, 31)) == 1


@pytest.mark.parametrize("name", ["A", "B", "ungm"])
def test_roundtrip_inversion(name):
    model = make_model(name)
    rng = np.random.default_rng(11)
    lo, hi = model.state_range
    for _ in range(1000):
        x = rng.uniform(lo, hi)
        t = int(rng.integers(1, 61))
        y = float(model.observe(x, t, None))
        cands = invert_observation(model, y, t)
        assert min(abs(c - x) for c in cands) < 1e-9


def test_simulate_shapes_and_noise():
    m = model_a()
    xs, ys = simulate(m, 60, 1.0, RngStream(0))
    assert xs.shape == (60,) and ys.shape == (60,)
    assert xs[0] == 1.0
    # process noise is Gamma(3,2): increments over the deterministic part
    M = 400
    inc = []
    for i in range(M):
        xs, _ = simulate(m, 2, 1.0, RngStream(1).child(i))
        inc.append(xs[1] - m.transition(1.0, 2, None))
    inc = np.asarray(inc)
    assert abs(inc.mean() - 1.5) < 0.15
    assert np.all(inc > 0)


def test_simulate_validates_steps():
    with pytest.raises(ValueError):
        simulate(model_a(), 0, 1.0, RngStream(0))


def test_make_model_registry():
    assert make_model("A").name == "A"
    assert make_model("ungm", obs_var=4.0).obs_var == 4.0
    ghost = make_model("ghost-obs")
    assert isinstance(ghost, GhostObsParams)
    assert ghost.noise_var == 25.0
    with pytest.raises(ValueError):
        make_model("no-such-model")


def test_debias_invert_masks():
    mc = ungm()
    vals, valid, pair = mc.debias_invert(np.array([5.0, -1.0]), 3)
    assert pair is True
    assert valid.tolist() == [True, False]
    assert vals[0] == pytest.approx(10.0)
    assert vals[1] == 0.0
    mb = model_b()
    vals, valid, pair = mb.debias_invert(np.array([0.0]), 3)
    assert pair is False and valid.all()
    assert vals[0] == pytest.approx(4.0)
