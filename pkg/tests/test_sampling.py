import math

import numpy as np
import pytest
from conftest import circle_point
from hypothesis import given, settings
from hypothesis import strategies as st

from itcircles.errors import CollinearError, InvalidParameterError, NoIntersectionError
from itcircles.preprocess import EdgePoint
from itcircles.sampling import (
    Circle,
    Cluster,
    ClusterStore,
    ItPair,
    ItsVerdict,
    SamplingParams,
    check_4th_point,
    cluster_insert,
    fit_circle_3pt,
    fit_circle_3pt_batch,
    its_check,
    its_check_batch,
    its_estimate,
    its_estimate_batch,
)

# |cos 45deg - cos 43deg|, evaluated at 30 digits.
TWO_DEGREE_GAP = 0.0242469204326229

coords = st.floats(-1000, 1000)
radii = st.floats(2, 500)
angles = st.floats(0, 2 * math.pi)


@settings(max_examples=200, deadline=None)
@given(coords, coords, radii, angles, st.floats(0.3, 2.0), st.floats(0.3, 2.0))
def test_three_point_fit_recovers_circle(a, b, r, t0, d1, d2):
    pts = [circle_point(a, b, r, t) for t in (t0, t0 + d1, t0 + d1 + d2)]
    c = fit_circle_3pt(*pts)
    assert c.a == pytest.approx(a, abs=1e-6 * r)
    assert c.b == pytest.approx(b, abs=1e-6 * r)
    assert c.r == pytest.approx(r, rel=1e-6)


def test_three_point_fit_collinear():
    with pytest.raises(CollinearError):
        fit_circle_3pt((0, 0), (1, 2), (2, 4))
    with pytest.raises(CollinearError):
        fit_circle_3pt((5, 5), (5, 5), (9, 1))


def test_three_point_example():
    assert fit_circle_3pt((0, 0), (2, 0), (0, 2)) == pytest.approx(Circle(1.0, 1.0, math.sqrt(2)))


def test_fourth_point_check():
    c = Circle(0.0, 0.0, 10.0)
    assert check_4th_point(c, (11.5, 0.0), 1.5)
    assert not check_4th_point(c, (11.6, 0.0), 1.5)
    assert check_4th_point(c, (0.0, -8.6), 1.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_batch_fit_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 100, (3, 20, 2))
    p[2, :3] = p[0, :3] + 2 * (p[1, :3] - p[0, :3])  # collinear rows
    a, b, r, ok = fit_circle_3pt_batch(p[0], p[1], p[2])
    for i in range(20):
        try:
            c = fit_circle_3pt(p[0, i], p[1, i], p[2, i])
        except CollinearError:
            assert not ok[i]
            continue
        assert ok[i]
        np.testing.assert_allclose((a[i], b[i], r[i]), c, rtol=1e-9, atol=1e-9)


def test_its_accepts_chord_of_circle():
    A = circle_point(50, 50, 20, 0.3)
    B = circle_point(50, 50, 20, 1.9)
    assert its_check(A, B) is ItsVerdict.ACCEPT
    (cx, cy), r = its_estimate(A, B)
    assert (cx, cy, r) == pytest.approx((50, 50, 20))


def test_its_two_degree_perturbation():
    A = circle_point(0, 0, 50, 0.0)
    B = circle_point(0, 0, 50, math.pi / 2)
    t = math.atan2(B.gy, B.gx) + math.radians(2)
    B2 = B._replace(gx=math.cos(t), gy=math.sin(t))
    dx, dy = B2.x - A.x, B2.y - A.y
    d = math.hypot(dx, dy)
    gap = abs((A.gx * dx + A.gy * dy) / d + (B2.gx * dx + B2.gy * dy) / d)
    assert gap == pytest.approx(TWO_DEGREE_GAP, rel=1e-9)
    assert its_check(A, B2, SamplingParams(delta_k=0.03)) is ItsVerdict.ACCEPT
    assert its_check(A, B2, SamplingParams(delta_k=0.02)) is ItsVerdict.NOT_ISOSCELES


def test_its_rejects_parallel_lines_and_diameters():
    # two points on a straight edge share one gradient direction
    A = EdgePoint(10, 10, 0.0, 1.0)
    B = EdgePoint(30, 10, 0.0, 1.0)
    assert its_check(A, B) is ItsVerdict.PARALLEL
    D1 = circle_point(0, 0, 20, 0.0)
    D2 = circle_point(0, 0, 20, math.pi)
    assert its_check(D1, D2) is ItsVerdict.PARALLEL


def test_its_too_close_and_order_of_checks():
    A = EdgePoint(10, 10, 1.0, 0.0)
    assert its_check(A, EdgePoint(11, 11, 0.0, 1.0)) is ItsVerdict.TOO_CLOSE
    # fails both the base-angle and the parallel test: base-angle is reported
    B = EdgePoint(20, 10, 1.0, 0.0)
    assert its_check(A, B) is ItsVerdict.NOT_ISOSCELES
    assert ItsVerdict.NOT_ISOSCELES.label == "not-isosceles"


def test_its_estimate_parallel_gradients_raise():
    with pytest.raises(NoIntersectionError):
        its_estimate(EdgePoint(0, 0, 1.0, 0.0), EdgePoint(0, 5, -1.0, 0.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_its_batch_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    n = 40
    xy = rng.integers(0, 60, (2, n, 2)).astype(float)
    t = rng.uniform(0, 2 * math.pi, (2, n))
    g = np.stack([np.cos(t), np.sin(t)], axis=-1)
    params = SamplingParams(delta_k=0.3)
    verdict = its_check_batch(xy[0], g[0], xy[1], g[1], params)
    cx, cy, r, ok = its_estimate_batch(xy[0], g[0], xy[1], g[1])
    for i in range(n):
        A = EdgePoint(xy[0, i, 0], xy[0, i, 1], *g[0, i])
        B = EdgePoint(xy[1, i, 0], xy[1, i, 1], *g[1, i])
        assert verdict[i] == its_check(A, B, params)
        try:
            (ex, ey), er = its_estimate(A, B)
        except NoIntersectionError:
            assert not ok[i]
            continue
        np.testing.assert_allclose((cx[i], cy[i], r[i]), (ex, ey, er), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize(
    "kwargs",
    [{"delta_k": -0.1}, {"delta_p": 0.0}, {"delta_p": 1.0}, {"t_r": 0}, {"d_min": -1}, {"d0": 0}, {"d_cap": 1.0}],
)
def test_sampling_params_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SamplingParams(**kwargs)


def _pair(x, y, r):
    p = EdgePoint(0, 0, 1.0, 0.0)
    return ItPair(p, p, (x, y), r)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100), st.floats(1, 50)), min_size=1, max_size=30))
def test_cluster_running_mean_equals_batch_mean(samples):
    c = Cluster(*samples[0], 5.0, [_pair(*samples[0])])
    ranges = [c.search_range]
    for s in samples[1:]:
        c.absorb(_pair(*s))
        ranges.append(c.search_range)
    np.testing.assert_allclose(c.circle, np.mean(samples, axis=0), rtol=1e-9, atol=1e-9)
    assert all(b >= a for a, b in zip(ranges, ranges[1:]))
    assert c.n == len(samples)


def test_cluster_growth_formula():
    c = Cluster(0.0, 0.0, 10.0, 5.0, [_pair(0, 0, 10)])
    c.absorb(_pair(3.0, 4.0, 10.0))
    # mean moves by (1.5, 2.0, 0) so the range grows by 2.5
    assert c.circle == pytest.approx((1.5, 2.0, 10.0))
    assert c.search_range == pytest.approx(7.5)


def test_cluster_growth_capped():
    c = Cluster(0.0, 0.0, 10.0, 5.0, [_pair(0, 0, 10)])
    c.absorb(_pair(30.0, 40.0, 10.0), d_cap=6.0)
    assert c.search_range == 6.0


def test_cluster_insert_prefers_nearest_containing():
    clusters: list = []
    first = cluster_insert(clusters, _pair(0, 0, 10))
    second = cluster_insert(clusters, _pair(8, 0, 10))
    assert first is not second and len(clusters) == 2
    got = cluster_insert(clusters, _pair(5, 0, 10))
    assert got is second
    far = cluster_insert(clusters, _pair(100, 100, 10))
    assert len(clusters) == 3 and far.n == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 40), st.floats(0, 40), st.floats(5, 15)), max_size=60))
def test_cluster_store_matches_list_insert(samples):
    clusters: list = []
    store = ClusterStore(5.0, None)
    for s in samples:
        a = cluster_insert(clusters, _pair(*s), 5.0)
        b = store.insert(_pair(*s))
        assert a.circle == pytest.approx(b.circle)
    assert len(store) == len(clusters) == store.created
    for a, b in zip(clusters, store):
        assert a.circle == pytest.approx(b.circle) and a.search_range == pytest.approx(b.search_range)


def test_cluster_store_remove_and_clear():
    store = ClusterStore()
    a = store.insert(_pair(0, 0, 10))
    b = store.insert(_pair(50, 0, 10))
    store.remove(a)
    assert list(store) == [b]
    assert store.insert(_pair(51, 0, 10)) is b
    store.clear()
    assert len(store) == 0
