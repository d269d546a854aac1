import numpy as np
import pytest
from scipy.interpolate import griddata

from lamina.base_dynamics import wrap
from lamina.graph_transform import (GraphTransformError, LeafSetup, contraction_sweep, default_D, graph_transform_step,
                                    measure_horizontal_map, solve_invariant_leaf, solve_leaf_chain)
from lamina.skew_core import (FiberFamily, IdentityFiberFamily, PerturbedMap, SkewProduct, make_standard_perturbation)


@pytest.fixture(scope="module")
def torus_G(torus_skew):
    return make_standard_perturbation(torus_skew, 1e-3, seed=0)


@pytest.fixture(scope="module")
def torus_setup(torus_G):
    return LeafSetup(torus_G, n_x=9, n_m=64)


def test_configuration_error():
    with pytest.raises(GraphTransformError, match="configuration error"):
        default_D(2.5, 0.5)


@pytest.mark.parametrize("which", ["solenoid", "torus"])
def test_zero_leaf_fixed_by_skew_product(which, skew, torus_skew, rng):
    F = skew if which == "solenoid" else torus_skew
    setup = LeafSetup(PerturbedMap.unperturbed(F), delta=0.05, n_x=3, n_m=32)
    b = F.base.random_point(rng)
    for kind in ("s", "u"):
        src = F.base.forward(b) if kind == "s" else F.base.backward(b)
        out = graph_transform_step(setup.zero_leaf(kind, src), b, setup)
        assert out.sup_norm() <= 1e-9
        assert out.report.max_residual <= 1e-10


def test_random_pair_contraction(small_setup, rng):
    pts = [small_setup.base.random_point(rng) for _ in range(3)]
    ratios = contraction_sweep(small_setup, pts, pairs_per_point=3, seed=2)
    assert ratios.shape == (3, 3)
    assert np.all(ratios <= 0.6) and np.all(ratios > 0)


def test_unstable_contraction(small_setup, rng):
    pts = [small_setup.base.random_point(rng) for _ in range(2)]
    ratios = contraction_sweep(small_setup, pts, pairs_per_point=2, kind="u", seed=2)
    assert np.all(ratios <= 0.6)


def test_forward_scatter_oracle(torus_setup, torus, rng):
    # push the source graph forward through G^-1 and resample it at the target nodes
    setup = torus_setup
    b = torus.random_point(rng)
    src = setup.random_leaf("s", torus.forward(b), rng)
    out = graph_transform_step(src, b, setup)
    assert out.report.max_residual <= 1e-10

    fine = np.linspace(-setup.delta, setup.delta, 4 * setup.n_x)
    mm = np.arange(4 * setup.n_m) / (4 * setup.n_m)
    XS, MM = np.meshgrid(fine, mm, indexing="ij")
    val = src(XS[..., None], MM)
    pts = torus.chart_to_manifold(src.point, np.stack([XS, val[..., 0]], axis=-1))
    Xo, mo = setup.G.backward(pts, MM)
    c = torus.manifold_to_chart(b, Xo)
    dom, other, m = c[..., 0].ravel(), c[..., 1].ravel(), mo.ravel()
    # periodic padding in m
    dom3 = np.concatenate([dom, dom, dom])
    m3 = np.concatenate([m - 1, m, m + 1])
    o3 = np.concatenate([other, other, other])
    nodes = out.grid.nodes()
    inner = np.abs(nodes[..., 0]) < 0.6 * setup.delta
    scattered = griddata((dom3, m3), o3, (nodes[..., 0][inner], nodes[..., 1][inner]), method="linear")

    # interpolation error of the source leaf on its grid
    hx, hm = src.grid.spacing
    v = src.values[..., 0]
    d2x = np.abs(np.diff(v, 2, axis=0)).max() / hx ** 2
    d2m = np.abs(np.roll(v, 1, 1) - 2 * v + np.roll(v, -1, 1)).max() / hm ** 2
    interp_err = (d2x * hx ** 2 + d2m * hm ** 2) / 8
    assert np.max(np.abs(scattered - out.values[..., 0][inner])) <= 2 * interp_err + 1e-9


def test_invariant_set_violation(torus_skew, rng):
    # chart radius far below the displacement a 1e-2 perturbation produces
    G = make_standard_perturbation(torus_skew, 1e-2, seed=0)
    setup = LeafSetup(G, delta=1e-5, n_x=3, n_m=16)
    b = torus_skew.base.random_point(rng)
    with pytest.raises(GraphTransformError, match="left invariant set"):
        graph_transform_step(setup.zero_leaf("s", torus_skew.base.forward(b)), b, setup)


def test_pullback_failure(small_setup, rng):
    b = small_setup.base.random_point(rng)
    leaf = small_setup.zero_leaf("s", small_setup.base.forward(b))
    with pytest.raises(GraphTransformError, match="pull-back failed at node"):
        graph_transform_step(leaf, b, small_setup, maxiter=0)


def test_unperturbed_solution_is_zero(skew, rng):
    setup = LeafSetup(PerturbedMap.unperturbed(skew), delta=0.05, n_x=3, n_m=16)
    leaf = solve_invariant_leaf("s", skew.base.random_point(rng), setup, depth=6)
    assert leaf.sup_norm() <= 1e-9


def test_cauchy_increments(torus_setup, torus, rng):
    b = torus.random_point(rng)
    leaves = [solve_invariant_leaf("s", b, torus_setup, depth=n) for n in range(1, 7)]
    inc = [leaves[i + 1].distance(leaves[i]) for i in range(len(leaves) - 1)]
    for a, c in zip(inc, inc[1:]):
        assert c <= 0.6 * a


def test_self_consistency(small_setup, solenoid, rng):
    b = solenoid.random_point(rng)
    n = 8
    at_hb = solve_invariant_leaf("s", solenoid.forward(b), small_setup, depth=n)
    pulled = graph_transform_step(at_hb, b, small_setup)
    direct = solve_invariant_leaf("s", b, small_setup, depth=n + 1)
    assert pulled.distance(direct) <= 1e-7


def test_chain_outputs_admissible(small_setup, solenoid, rng):
    b = solenoid.random_point(rng)
    chain = solve_leaf_chain("s", b, small_setup, depth=10, keep=4)
    assert [lf.depth for lf in chain] == [10, 9, 8, 7]
    for lf in chain:
        assert lf.is_admissible()
    assert chain[0].error_bound < chain[-1].error_bound


def test_horizontal_map_unperturbed(skew, solenoid, rng):
    G = PerturbedMap.unperturbed(skew)
    setup = LeafSetup(G, delta=0.05, n_x=5, n_m=128)
    leaf = setup.zero_leaf("s", solenoid.random_point(rng))
    rep = measure_horizontal_map(leaf, G)
    assert rep.lipschitz <= rep.L + 10 * setup.delta
    # closed form: the fiber map along a stable disc is m + a cos(2 pi y) + eps0 sin(2 pi m)
    fam = skew.fiber
    assert rep.lipschitz == pytest.approx(1 + 2 * np.pi * fam.eps0, rel=0.05)


def test_horizontal_map_identity_fibers(solenoid, rng):
    G = PerturbedMap.unperturbed(SkewProduct(solenoid, IdentityFiberFamily()))
    setup = LeafSetup(G, delta=0.05, n_x=5, n_m=32)
    rep = measure_horizontal_map(setup.zero_leaf("s", solenoid.random_point(rng)), G)
    assert rep.lipschitz == pytest.approx(1.0, rel=0.05)


def test_horizontal_map_leaf_pair_stability(setup, solenoid, rng):
    from lamina.graph_transform import horizontal_map
    b = solenoid.random_point(rng)
    l0 = setup.random_leaf("s", b, rng)
    l1 = setup.random_leaf("s", b, rng)
    diff = np.max(np.abs(wrap(horizontal_map(l0, setup.G) - horizontal_map(l1, setup.G))))
    C = diff / l0.distance(l1)
    assert np.isfinite(C) and C <= 1.0 + setup.L
    rep = measure_horizontal_map(l0, setup.G, L=setup.L)
    assert rep.lipschitz <= (setup.L + 10 * setup.delta) * (1 + rep.leaf_lipschitz)


def _reversed(G, base):
    inv = base.inverse()
    fam = G.reference.fiber
    fiber = FiberFamily(lambda X, m: fam.inverse(base.inverse_coords(X), m),
                        lambda X, m: fam.forward(base.inverse_coords(X), m))
    return PerturbedMap(SkewProduct(inv, fiber), G.backward, G.forward, rho=G.rho), inv


def test_unstable_machinery_on_reversed_torus(torus_G, torus_setup, torus, rng):
    G_rev, inv = _reversed(torus_G, torus)
    rev_setup = LeafSetup(G_rev, delta=torus_setup.delta, n_x=torus_setup.n_x, n_m=torus_setup.n_m,
                          D=torus_setup.D, L=torus_setup.L)
    b = torus.random_point(rng)
    s_leaf = solve_invariant_leaf("s", b, torus_setup, depth=8)
    u_leaf = solve_invariant_leaf("u", inv.point(*b.coords), rev_setup, depth=8)
    s1 = np.sign(inv.e_u @ torus.e_s)  # orientation of the swapped frames
    s2 = np.sign(inv.e_s @ torus.e_u)
    assert abs(abs(inv.e_u @ torus.e_s) - 1) < 1e-12
    expected = s2 * (s_leaf.values[::-1] if s1 < 0 else s_leaf.values)
    assert np.max(np.abs(u_leaf.values - expected)) < 1e-8


def test_grid_refinement(torus_G, torus, rng):
    b = torus.random_point(rng)
    coarse = solve_invariant_leaf("s", b, LeafSetup(torus_G, n_x=5, n_m=32), depth=10)
    fine = solve_invariant_leaf("s", b, LeafSetup(torus_G, n_x=9, n_m=64), depth=10)
    common = fine.values[::2, ::2]
    v = fine.values[..., 0]
    hx, hm = coarse.grid.spacing
    fx, fm = fine.grid.spacing
    d2x = np.abs(np.diff(v, 2, axis=0)).max() / fx ** 2
    d2m = np.abs(np.roll(v, 1, 1) - 2 * v + np.roll(v, -1, 1)).max() / fm ** 2
    predicted = (d2x * hx ** 2 + d2m * hm ** 2) / 8
    assert np.max(np.abs(coarse.values - common)) <= 4 * predicted + 1e-9
