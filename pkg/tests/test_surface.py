import math
import random
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadgeo.errors import StepTooCoarse
from quadgeo.forms import class_group, is_discriminant
from quadgeo.observables import TestFunction, constant, cusp_indicator
from quadgeo.surface import (
    HAAR_ACCEPTANCE,
    NEIGHBORS,
    T,
    OrbitTube,
    OutOfTrustRegion,
    SurfacePoint,
    distance,
    distance_to_orbit,
    flow,
    flow_frames,
    fold,
    fold_frames,
    frame_coords,
    frame_from,
    haar_frames,
    haar_integral,
    haar_sample,
    integrate_along,
    lift_geodesic,
    shadowing_interval,
)
from quadgeo.units import regulator


def geodesics(d):
    reg = regulator(d)
    return [lift_geodesic(c, reg) for c in class_group(d, table=False).cycles]


@st.composite
def frames(draw):
    x = draw(st.floats(-3, 3))
    y = draw(st.floats(0.05, 20))
    theta = draw(st.floats(0, 2 * math.pi))
    return frame_from(x, y, theta)


def test_frame_from_roundtrip():
    g = frame_from(0.3, 1.7, 2.1)
    assert np.linalg.det(g) == pytest.approx(1.0, abs=1e-12)
    x, y, th = frame_coords(g)
    assert (x, y, th) == pytest.approx((0.3, 1.7, 2.1), abs=1e-12)


def test_fold_examples():
    assert fold(frame_from(5.0, 1.0, 0.3)).z == pytest.approx(1j, abs=1e-12)
    assert fold(frame_from(0.5, 0.5, 0.3)).z == pytest.approx(1j, abs=1e-12)
    p = fold(frame_from(0.5, 0.5, 0.3))
    assert fold(p.frame) == p


def test_fold_tie_breaking():
    # x = 1/2 maps to -1/2; on the arc the x >= 0 side is kept
    assert fold(frame_from(0.5, 2.0, 0.0)).z.real == pytest.approx(-0.5)
    z = fold(frame_from(-0.3, math.sqrt(0.91), 1.0)).z
    assert abs(z) == pytest.approx(1.0) and z.real == pytest.approx(0.3)


@given(frames())
def test_fold_invariants_and_idempotence(g):
    p = fold(g)
    x, y, _ = frame_coords(p.frame)
    assert abs(np.linalg.det(p.frame) - 1) <= 1e-12
    assert -0.5 - 1e-9 <= x < 0.5 + 1e-9
    assert x * x + y * y >= 1 - 1e-9
    assert fold(p.frame) == p
    # the folded frame differs from g by an element of SL2(Z)
    m = p.frame @ np.linalg.inv(g)
    assert np.allclose(m, np.rint(m), atol=1e-6)


@given(frames(), st.floats(-5, 5), st.floats(-5, 5))
def test_flow_group_law(g, s, t):
    p = fold(g)
    assert flow(p, 0.0) == p
    a = flow(flow(p, s), t)
    b = flow(p, s + t)
    assert distance(a, b) < 1e-8


def test_lift_endpoints_and_conjugation():
    (phi,) = geodesics(5)
    assert sorted([phi.w, phi.w_conj]) == pytest.approx(sorted([(-1 + math.sqrt(5)) / 2, (-1 - math.sqrt(5)) / 2]))
    for d in (13, 40, 229):
        for g in geodesics(d):
            a, b, _ = g.form
            assert g.w + g.w_conj == pytest.approx(-b / a)
            assert g.w - g.w_conj == pytest.approx(math.sqrt(d) / abs(a))


def test_d40_classes_share_period():
    gs = geodesics(40)
    assert len(gs) == 2
    assert all(g.period == pytest.approx(7.2737, abs=1e-4) for g in gs)


def test_base_frame_conjugates_automorph_to_diagonal():
    for d in (5, 13, 40, 229, 1001):
        for g in geodesics(d):
            m = np.array(g.automorph, dtype=float)
            c = np.linalg.inv(g.base_frame) @ m @ g.base_frame
            target = np.diag([math.exp(g.period / 2), math.exp(-g.period / 2)])
            assert np.allclose(np.abs(c), target, rtol=1e-8, atol=1e-8 * target.max())


def test_d5_base_point_returns_after_one_period():
    (phi,) = geodesics(5)
    start = fold(phi.base_frame)
    assert phi.period == pytest.approx(1.9248, abs=1e-4)
    assert distance(flow(start, phi.period), start) < 1e-6


def test_closure_of_random_geodesics():
    rng = random.Random(3)
    ds = rng.sample([d for d in range(5, 10**4) if is_discriminant(d)], 100)
    for d in ds:
        for g in geodesics(d):
            assert g.closure_error() < 1e-6
            # the orbit is continuous across anchor switches
            t = np.arange(0, g.period, 0.01)
            f = g.frames_at(t)
            assert g.frames_at([g.period])[0] == pytest.approx(g.frames_at([0.0])[0], abs=1e-6)
            step = np.array([distance(SurfacePoint(a), SurfacePoint(b)) for a, b in zip(f[:-1:50], f[1::50])])
            assert step.max() < 0.02


def test_integrate_along_examples():
    (phi,) = geodesics(5)
    assert integrate_along(phi, constant(), 1e-2) == 1.0
    f = cusp_indicator(1)
    assert integrate_along(phi, f, 1e-2) == pytest.approx(integrate_along(phi, f, 1e-5), abs=1e-3)
    with pytest.raises(StepTooCoarse):
        integrate_along(phi, f, 1.0)


def test_step_halving_change_is_second_order_for_smooth_f():
    # periodic smooth integrands converge even faster; O(step^2) is the bound
    def fn(g):
        # C-infinity on X: supported in y > 1.1, where the representative is unique up to T
        _, y, theta = frame_coords(g)
        lift = np.where(y > 1.1, np.exp(-1.0 / np.maximum(y - 1.1, 1e-300)), 0.0)
        return lift * np.cos(theta)

    smooth = TestFunction("smooth", fn)
    for g in geodesics(40) + geodesics(229):
        for h in (0.08, 0.04, 0.02):
            assert abs(integrate_along(g, smooth, h) - integrate_along(g, smooth, h / 2)) <= h * h


def test_distance_examples():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = haar_sample(rng)
        q = haar_sample(rng)
        assert distance(p, p) < 1e-14
        assert distance(p, fold(T @ p.frame)) < 1e-12
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfTrustRegion)
            assert distance(p, q) == pytest.approx(distance(q, p), abs=1e-12)


def test_distance_warns_outside_trust_region():
    p = fold(frame_from(0.0, 50.0, 0.0))
    q = fold(frame_from(0.0, 1.5, 0.0))
    with pytest.warns(OutOfTrustRegion):
        assert distance(p, q) > 0.3


def test_neighbor_words():
    assert NEIGHBORS.shape == (40, 2, 2)
    dets = np.linalg.det(NEIGHBORS)
    assert np.allclose(dets, 1)


def test_distance_to_orbit_examples():
    (phi,) = geodesics(5)
    tube = OrbitTube(phi, radius=0.1)
    assert distance_to_orbit(SurfacePoint(tube.samples[3]), tube) <= tube.step
    p = flow(fold(phi.base_frame), 0.37 * phi.period)
    assert distance_to_orbit(p, tube) <= tube.step
    cusp = fold(frame_from(0.1, 50.0, 0.4))
    assert distance_to_orbit(cusp, tube) > 0.3


def test_haar_sampler_matches_area_integrals():
    rng = np.random.default_rng(11)
    g = haar_frames(rng, 10**6)
    y = frame_coords(g)[1]
    for Y in (1.0, 1.5, 2.0, 4.0):
        hits = (y > Y).astype(float)
        se = hits.std() / math.sqrt(hits.size)
        assert abs(hits.mean() - 3 / (math.pi * Y)) < 3 * se
    assert (y > 2).mean() == pytest.approx(3 / (2 * math.pi), abs=5e-3)
    assert (y > 1).mean() == pytest.approx(3 / math.pi, abs=5e-3)


def test_haar_acceptance_rate():
    assert HAAR_ACCEPTANCE == pytest.approx(math.pi * math.sqrt(3) / 6)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        n = 200_000
        x = rng.random(n) - 0.5
        y = (math.sqrt(3) / 2) / (1 - rng.random(n))
        rate = (x * x + y * y >= 1).mean()
        assert rate == pytest.approx(HAAR_ACCEPTANCE, abs=4 * math.sqrt(0.25 / n))


def test_haar_integral_exact_and_mc():
    assert haar_integral(constant()) == (1.0, 0.0)
    assert haar_integral(cusp_indicator(2))[0] == pytest.approx(3 / (2 * math.pi), rel=1e-14)
    v, se = haar_integral(cusp_indicator(2), n_samples=10**5, rng=np.random.default_rng(1), exact=False)
    assert abs(v - 3 / (2 * math.pi)) < 3 * se


def test_shadowing_interval_grows_with_minus_log_r():
    (phi,) = geodesics(5)
    lengths = []
    for r in (1e-2, 1e-3, 1e-4):
        tube = OrbitTube(phi, radius=math.sqrt(r))
        lengths.append(shadowing_interval(tube, r))
    slopes = np.diff(lengths) / math.log(10)
    assert np.all(slopes > 0)
    assert slopes.max() / slopes.min() <= 2


def test_flow_frames_broadcasts():
    g = frame_from(np.zeros(3), np.ones(3), np.zeros(3))
    out = flow_frames(g, np.array([0.0, 1.0, 2.0]))
    assert out.shape == (3, 2, 2)
    assert np.allclose(fold_frames(out[0]), fold_frames(g[0]))
