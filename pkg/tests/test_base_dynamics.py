import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lamina.base_dynamics import BaseDynamicsError, HyperbolicConstants, Solenoid, TorusAnosov, circle_doubling, wrap


def test_solenoid_map_example():
    s = Solenoid()
    np.testing.assert_allclose(s.map_coords(np.array([0.0, 0.0, 0.0])), [0.0, 1.0, 0.0], atol=1e-15)


def test_torus_fixed_point():
    t = TorusAnosov()
    assert np.array_equal(t.map_coords(np.zeros(2)), np.zeros(2))


def test_solenoid_round_trip(solenoid, rng):
    for _ in range(50):
        b = solenoid.random_point(rng)
        assert solenoid.point_distance(solenoid.backward(solenoid.forward(b)), b) < 1e-10
        back = solenoid.backward(b)
        assert solenoid.distance(solenoid.map_coords(back.coords), b.coords) < 1e-10


def test_torus_round_trip(torus, rng):
    X = rng.random((1000, 2))
    assert np.max(torus.distance(torus.map_coords(torus.inverse_coords(X)), X)) < 1e-10


def test_point_coordinates_follow_the_map(solenoid, rng):
    # the symbolic successor agrees with the coordinate formula
    b = solenoid.random_point(rng)
    assert solenoid.distance(solenoid.forward(b).coords, solenoid.map_coords(b.coords)) < 1e-12


def test_bad_parameters():
    with pytest.raises(BaseDynamicsError):
        Solenoid(lam=0.6)
    with pytest.raises(BaseDynamicsError):
        TorusAnosov(((1, 0), (0, 1)))
    with pytest.raises(BaseDynamicsError):
        HyperbolicConstants(0.1, 0.05, 0.5, 0.5)


def test_backward_needs_itinerary(solenoid):
    with pytest.raises(BaseDynamicsError, match="insufficient itinerary depth"):
        solenoid.backward(solenoid.point(0.3, ()))


@pytest.mark.parametrize("kind", ["solenoid", "torus"])
def test_chart_origin_and_round_trip(kind, solenoid, torus, rng):
    base = solenoid if kind == "solenoid" else torus
    b = base.random_point(rng)
    assert base.distance(base.chart_to_manifold(b, np.zeros(base.chart_dim)), b.coords) == 0.0
    v = rng.uniform(-0.05, 0.05, size=(100, base.chart_dim))
    back = base.manifold_to_chart(b, base.chart_to_manifold(b, v))
    assert np.max(np.abs(back - v)) < 1e-10


def test_out_of_chart(solenoid, rng):
    b = solenoid.random_point(rng)
    far = solenoid.chart_to_manifold(b, np.array([0.0, 0.0, 0.45]))
    solenoid.to_chart(b, far)
    with pytest.raises(BaseDynamicsError, match="out of chart"):
        solenoid.to_chart(b, far, radius=0.1)


@pytest.mark.parametrize("kind", ["solenoid", "torus"])
def test_chart_derivative_is_block_diagonal(kind, solenoid, torus, rng):
    base = solenoid if kind == "solenoid" else torus
    c = base.constants
    b = base.random_point(rng)
    hb = base.forward(b)
    h = 1e-6
    cols = []
    for i in range(base.chart_dim):
        e = np.zeros(base.chart_dim)
        e[i] = h
        fp = base.manifold_to_chart(hb, base.map_coords(base.chart_to_manifold(b, e)))
        fm = base.manifold_to_chart(hb, base.map_coords(base.chart_to_manifold(b, -e)))
        cols.append((fp - fm) / (2 * h))
    J = np.stack(cols, axis=1)
    k = base.stable_dim
    assert np.max(np.abs(J[:k, k:])) < 1e-6 and np.max(np.abs(J[k:, :k])) < 1e-6
    As = np.linalg.norm(J[:k, :k], 2)
    Au_inv = np.linalg.norm(np.linalg.inv(J[k:, k:]), 2)
    assert c.lambda_minus - 1e-6 <= As <= c.lambda_ + 1e-6
    assert c.mu_minus - 1e-6 <= Au_inv <= c.mu + 1e-6


def test_frame_growth_rates(solenoid, rng):
    # finite differences in the ambient coordinates along the frames, no charts involved
    delta, h = 0.05, 1e-7
    lam, mu = solenoid.constants.lambda_, solenoid.constants.mu
    for _ in range(200):
        b = solenoid.random_point(rng)
        es, eu = solenoid.frames(b)
        X = b.coords
        for v in es:
            r = solenoid.distance(solenoid.map_coords(X + h * v), solenoid.map_coords(X)) / solenoid.distance(X + h * v, X)
            assert lam - 10 * delta <= r <= lam + 10 * delta
        v = eu[0]
        r = solenoid.distance(solenoid.map_coords(X + h * v), solenoid.map_coords(X)) / solenoid.distance(X + h * v, X)
        assert 1 / mu - 10 * delta <= r <= 1 / mu + 10 * delta


def test_product_point_same_point(solenoid, torus, rng):
    for base in (solenoid, torus):
        b = base.random_point(rng)
        assert base.point_distance(base.product_point(b, b), b) < 1e-15


def test_product_point_not_local(torus):
    with pytest.raises(BaseDynamicsError, match="points not local"):
        torus.product_point(torus.point(0.1, 0.1), torus.point(0.5, 0.5))


def test_torus_product_point_linear_solve(torus, rng):
    for _ in range(20):
        b = torus.random_point(rng)
        d = rng.uniform(-0.02, 0.02, 2)
        b2 = torus.point(*(b.coords + d))
        star = torus.product_point(b, b2)
        # oracle: b + t e_u = b2 + s e_s
        t, s = np.linalg.solve(np.column_stack([torus.e_u, -torus.e_s]), d)
        np.testing.assert_allclose(wrap(star.coords - (b.coords + t * torus.e_u)), 0, atol=1e-12)
        np.testing.assert_allclose(wrap(star.coords - (b2.coords + s * torus.e_s)), 0, atol=1e-12)
        total = torus.point_distance(b, star) + torus.point_distance(b2, star)
        assert total <= torus.product_constant * torus.point_distance(b, b2) + 1e-12


def test_solenoid_product_point_tracks_stable_leaf(solenoid, rng):
    delta = 0.05
    for _ in range(20):
        b = solenoid.random_point(rng)
        b2 = solenoid.shift_along_unstable(solenoid.random_point(rng), 0.0)
        b2 = solenoid.point((b.angle + rng.uniform(-0.01, 0.01)) % 1.0, b2.past)
        if solenoid.point_distance(b, b2) > delta:
            continue
        star = solenoid.product_point(b, b2)
        assert star.angle == pytest.approx(b2.angle, abs=1e-15)
        x, x2 = star, b2
        for _ in range(40):
            x, x2 = solenoid.forward(x), solenoid.forward(x2)
            assert solenoid.point_distance(x, x2) <= delta
        total = solenoid.point_distance(b, star) + solenoid.point_distance(b2, star)
        assert total <= solenoid.product_constant * solenoid.point_distance(b, b2) + 1e-12


def test_solenoid_stable_rates_exact(solenoid, rng):
    b = solenoid.random_point(rng)
    X2 = b.coords + np.array([0.0, 0.003, -0.002])
    r = solenoid.manifold_contraction_rates(b, X2, 4)  # beyond this the pair is at roundoff scale
    np.testing.assert_allclose(r, solenoid.lam, rtol=1e-9)


def test_solenoid_unstable_rates_exact(solenoid, rng):
    b = solenoid.random_point(rng)
    b2 = solenoid.shift_along_unstable(b, 1e-3)
    x, x2 = b, b2
    for _ in range(8):
        y, y2 = solenoid.backward(x), solenoid.backward(x2)
        assert abs(wrap(y.angle - y2.angle)) / abs(wrap(x.angle - x2.angle)) == pytest.approx(0.5, abs=1e-9)
        x, x2 = y, y2


def test_torus_rates_are_eigenvalues(torus, rng):
    b = torus.random_point(rng)
    rs = torus.manifold_contraction_rates(b, b.coords + 1e-3 * torus.e_s, 10)
    ru = torus.manifold_contraction_rates(b, b.coords + 1e-3 * torus.e_u, 10, direction="backward")
    np.testing.assert_allclose(rs, abs(torus.eig_s), atol=1e-10)
    np.testing.assert_allclose(ru, 1 / abs(torus.eig_u), atol=1e-10)


def test_circle_doubling():
    np.testing.assert_allclose(circle_doubling([0.25, 0.75, 0.5]), [0.5, 0.5, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_solenoid_expansivity(seed):
    s = Solenoid()
    rng = np.random.default_rng(seed)
    b, b2 = s.random_point(rng), s.random_point(rng)
    if s.point_distance(b, b2) < 0.01:
        return
    threshold = 2 * s.product_constant * 0.01
    x, x2 = b, b2
    separated = False
    for _ in range(30):
        if s.point_distance(x, x2) > threshold:
            separated = True
            break
        x, x2 = s.backward(x), s.backward(x2)
    x, x2 = b, b2
    for _ in range(30):
        if separated or s.point_distance(x, x2) > threshold:
            separated = True
            break
        x, x2 = s.forward(x), s.forward(x2)
    assert separated
