"""Central leaves, conjugated fiber maps and the global center-stable lamination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .base_dynamics import Solenoid, wrap
from .graph_transform import STABLE, UNSTABLE, GraphTransformError, LeafFunction, LeafSetup, solve_leaf_chain
from .skew_core import PerturbedMap


class LaminationError(RuntimeError):
    pass


@dataclass
class CentralLeaf:
    """``W_b`` as a graph over the fiber: ``m -> beta(m) = (x_s, x_u)`` in the chart at ``b``."""

    base_point: object
    m_grid: np.ndarray
    beta: np.ndarray
    tilde_beta: np.ndarray
    stable_leaf: LeafFunction
    unstable_leaf: LeafFunction
    base: object
    iterations: int = 0
    residual: float = 0.0

    def evaluate(self, m, tol: float = 1e-13, maxiter: int = 50):
        """Chart coordinates ``(x_s, x_u)`` of the leaf over arbitrary fibers ``m``."""
        beta, _, _ = _central_fixed_point(self.stable_leaf, self.unstable_leaf, np.asarray(m, dtype=float),
                                          tol, maxiter)
        return beta

    def tilde(self, m):
        """Points of ``W_b`` in base coordinates."""
        return self.base.chart_to_manifold(self.base_point, self.evaluate(m))

    def displacement(self, m=None):
        """``tilde_beta(m) - b`` in base coordinates (periodic coordinates wrapped)."""
        T = self.tilde_beta if m is None else self.tilde(m)
        return self.base.coord_diff(T, self.base_point.coords)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.beta)))

    def lipschitz(self) -> float:
        h = self.m_grid[1] - self.m_grid[0]
        d = (np.roll(self.beta, -1, axis=0) - self.beta) / h
        return float(np.max(np.abs(d).sum(axis=-1)))

    def tilde_lipschitz(self) -> float:
        h = self.m_grid[1] - self.m_grid[0]
        d = self.base.coord_diff(np.roll(self.tilde_beta, -1, axis=0), self.tilde_beta) / h
        return float(np.max(np.abs(d).sum(axis=-1)))


def _central_fixed_point(leaf_s: LeafFunction, leaf_u: LeafFunction, m, tol, maxiter):
    k = leaf_u.out_dim
    l = leaf_s.out_dim
    xs = np.zeros(m.shape + (k,))
    xu = np.zeros(m.shape + (l,))
    for it in range(1, maxiter + 1):
        xu_new = leaf_s(xs, m)
        xs_new = leaf_u(xu_new, m)
        res = max(np.max(np.abs(xu_new - xu), initial=0.0), np.max(np.abs(xs_new - xs), initial=0.0))
        xs, xu = xs_new, xu_new
        if res <= tol:
            break
    else:
        raise LaminationError("central fixed point did not converge")
    return np.concatenate([xs, xu], axis=-1), it, res


def _central_from_leaves(setup: LeafSetup, b, leaf_s, leaf_u, n_m: int) -> CentralLeaf:
    m = np.arange(n_m) / n_m
    beta, it, res = _central_fixed_point(leaf_s, leaf_u, m, 1e-13, 50)
    tb = setup.base.chart_to_manifold(b, beta)
    return CentralLeaf(b, m, beta, tb, leaf_s, leaf_u, setup.base, it, res)


def central_leaf(b, setup: LeafSetup, depth: int, n_m: int = 256) -> CentralLeaf:
    """Intersect the center-stable and center-unstable leaves at ``b``."""
    leaf_s = solve_leaf_chain(STABLE, b, setup, depth)[0]
    leaf_u = solve_leaf_chain(UNSTABLE, b, setup, depth)[0]
    return _central_from_leaves(setup, b, leaf_s, leaf_u, n_m)


def central_leaf_pair(b, setup: LeafSetup, depth: int, n_m: int = 256):
    """``(W_b, W_{h(b)})`` sharing orbit computations.

    The center-stable chain from ``b`` to depth ``depth + 1`` supplies both
    stable leaves; the center-unstable chain is run from ``h(b)``.
    """
    base = setup.base
    hb = base.forward(b)
    s_b, s_hb = solve_leaf_chain(STABLE, b, setup, depth + 1, keep=2)
    u_hb, u_b = solve_leaf_chain(UNSTABLE, hb, setup, depth + 1, keep=2)
    return _central_from_leaves(setup, b, s_b, u_b, n_m), _central_from_leaves(setup, hb, s_hb, u_hb, n_m)


def invariance_residual(W_b: CentralLeaf, W_hb: CentralLeaf, G: PerturbedMap, m=None) -> float:
    """``sup_m d(G(tilde_beta_b(m), m), tilde_beta_{h(b)}(m'))`` with ``m'`` the image fiber."""
    m = W_b.m_grid if m is None else np.asarray(m, dtype=float)
    X, mo = G.forward(W_b.tilde(m), m)
    return float(np.max(G.base.distance(X, W_hb.tilde(mo))))


def conjugated_fiber_map(W_b: CentralLeaf, W_hb: CentralLeaf, G: PerturbedMap, m):
    """``(g_b(m), g_b^{-1}(m))`` for the skew product conjugate to ``G``."""
    m = np.asarray(m, dtype=float)
    g = G.forward(W_b.tilde(m), m)[1]
    ginv = G.backward(W_hb.tilde(m), m)[1]
    return g, ginv


@dataclass
class FiberMapComparison:
    c0: float
    c1: float
    inverse_c0: float
    roundtrip: float


def compare_fiber_maps(W_b: CentralLeaf, W_hb: CentralLeaf, G: PerturbedMap, n: int = 256,
                       fd_step: float = 1e-5) -> FiberMapComparison:
    """Distances between ``g_b^{+-1}`` and ``f_b^{+-1}`` on a uniform fiber grid."""
    m = np.arange(n) / n
    fam = G.reference.fiber
    b = W_b.base_point.coords
    g, ginv = conjugated_fiber_map(W_b, W_hb, G, m)
    f = fam.forward(b, m)
    # f_b^{-1} maps the fiber over h(b) back to the fiber over b
    finv = fam.inverse(b, m)
    gp, _ = conjugated_fiber_map(W_b, W_hb, G, m + fd_step)
    gm, _ = conjugated_fiber_map(W_b, W_hb, G, m - fd_step)
    dg = wrap(gp - gm) / (2 * fd_step)
    df = fam.dm(b, m)
    c0 = float(np.max(np.abs(wrap(g - f))))
    c1 = c0 + float(np.max(np.abs(dg - df)))
    inv_c0 = float(np.max(np.abs(wrap(ginv - finv))))
    _, back = conjugated_fiber_map(W_b, W_hb, G, g)
    rt = float(np.max(np.abs(wrap(back - m))))
    return FiberMapComparison(c0, c1, inv_c0, rt)


def conjugacy_residual(W_b: CentralLeaf, W_hb: CentralLeaf, G: PerturbedMap, n: int = 256) -> float:
    """``H G H^{-1}(b, m)`` against ``(h(b), g_b(m))`` on sample fibers.

    ``H^{-1}(b, m) = (tilde_beta_b(m), m)``; ``H`` reads off the leaf and the
    fiber coordinate, so the residual is the distance of the image from
    ``W_{h(b)}`` together with the fiber mismatch.
    """
    m = np.arange(n) / n
    X, mo = G.forward(W_b.tilde(m), m)
    g, _ = conjugated_fiber_map(W_b, W_hb, G, m)
    base_err = np.max(G.base.distance(X, W_hb.tilde(mo)))
    return float(max(base_err, np.max(np.abs(wrap(mo - g)))))


@dataclass
class DisjointnessRecord:
    distance: float
    min_graph_distance: float
    argmin_m: float


def check_disjointness(setup: LeafSetup, pairs, depth: int, n_m: int = 256, leaves: dict | None = None):
    """Minimum over fibers of the base distance between central leaves of each pair.

    Graphs over ``M`` can only meet within a common fiber, so the graphs are
    disjoint iff this minimum is positive.
    """
    base = setup.base
    cache = {} if leaves is None else leaves
    out = []
    for b, b2 in pairs:
        d = base.point_distance(b, b2)
        if d == 0.0:
            raise LaminationError("pair points must be distinct")
        Ws = []
        for p in (b, b2):
            key = id(p)
            if key not in cache:
                cache[key] = central_leaf(p, setup, depth, n_m)
            Ws.append(cache[key])
        dist = base.distance(Ws[0].tilde_beta, Ws[1].tilde_beta)
        j = int(np.argmin(dist))
        out.append(DisjointnessRecord(d, float(dist[j]), float(Ws[0].m_grid[j])))
    return out


# --- global center-stable leaves over an expanding circle map -------------------------


def _require_solenoid(G):
    if not isinstance(G.base, Solenoid):
        raise LaminationError("global stable leaves need a solenoid base (expanding factor on the circle)")


def _lifted_orbit_y(G, y, w, m, n):
    """Lifted angle after ``n`` steps of ``G`` starting from lift ``y``."""
    X = np.stack([np.asarray(y, dtype=float) % 1.0, w.real, w.imag], axis=-1)
    lift = np.asarray(y, dtype=float).copy()
    mm = np.asarray(m, dtype=float)
    for _ in range(n):
        Xn, mm = G.forward(X, mm)
        lift = 2.0 * lift + wrap(Xn[..., 0] - 2.0 * X[..., 0])
        X = Xn
    return lift


def stable_leaf_point(G: PerturbedMap, z, w, m, depth: int = 40, tol: float = 1e-15, maxiter: int = 30):
    """Angle ``beta^s_z(w, m)`` of the global center-stable leaf of ``z`` over ``(w, m)``.

    The leaf is the set of points whose forward orbit shadows the doubling
    orbit of ``z``; at depth ``n`` its angle solves ``Y_n(y) = 2^n z`` with
    ``Y_n`` the lifted angle of ``G^n``.  Since ``Y_n' = 2^n (1 + O(rho))``
    the chord iteration with slope ``2^n`` contracts by ``O(rho)`` per step.
    """
    _require_solenoid(G)
    z, w, m = np.broadcast_arrays(np.asarray(z, dtype=float) % 1.0, np.asarray(w, dtype=complex),
                                  np.asarray(m, dtype=float))
    y = z.copy()
    target = np.ldexp(z, depth)
    for _ in range(maxiter):
        step = np.ldexp(_lifted_orbit_y(G, y, w, m, depth) - target, -depth)
        y = y - step
        if np.max(np.abs(step), initial=0.0) <= tol:
            break
    else:
        raise LaminationError("stable leaf shooting did not converge")
    return y % 1.0


def semiconjugacy_q_oracle(G: PerturbedMap, X, m, depth: int = 45):
    """``q`` by forward tracking: the limit of ``2^{-n}`` times the lifted angle of ``G^n``."""
    X = np.asarray(X, dtype=float)
    w = X[..., 1] + 1j * X[..., 2]
    lift = _lifted_orbit_y(G, X[..., 0] % 1.0, w, m, depth)
    return np.ldexp(lift, -depth) % 1.0


def semiconjugacy_q(G: PerturbedMap, X, m, depth: int = 40, window: float = 0.05, n_scan: int = 4,
                    tol: float = 1e-12):
    """``q(x)``: the ``z`` whose global stable leaf passes through ``x``.

    Root-finds ``z -> wrap(beta^s_z(w, m) - y)`` near ``y``: a coarse scan of
    ``[y - window, y + window]`` for a sign change, then vectorized bisection.
    """
    _require_solenoid(G)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = np.atleast_1d(np.asarray(m, dtype=float))
    y = X[..., 0] % 1.0
    w = X[..., 1] + 1j * X[..., 2]

    def f(z):
        return wrap(stable_leaf_point(G, z, w, m, depth) - y)

    grid = np.linspace(-window, window, n_scan + 1)
    vals = np.stack([f(y + t) for t in grid])
    sign_change = (vals[:-1] <= 0) & (vals[1:] >= 0)
    if not np.all(sign_change.any(axis=0)):
        raise LaminationError("leaf family not surjective at x")
    j = np.argmax(sign_change, axis=0)
    lo = y + grid[j]
    hi = y + grid[j + 1]
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        neg = f(mid) <= 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return (0.5 * (lo + hi)) % 1.0


@dataclass
class GlobalStableLeaf:
    """``beta^s_z`` sampled on ``F x M``; values are angle offsets from ``z``."""

    z: float
    w_axis: np.ndarray
    m_axis: np.ndarray
    offsets: np.ndarray
    R: float
    D: float
    delta: float

    def __call__(self, w, m):
        w = np.asarray(w, dtype=complex)
        return (self.z + _grid_eval(self.offsets, self.w_axis, self.m_axis, w, m)) % 1.0

    @property
    def beta_s_global(self):
        return (self.z + self.offsets) % 1.0

    def sup_offset(self) -> float:
        return float(np.max(np.abs(self.offsets)))

    def lipschitz(self) -> float:
        hw = self.w_axis[1] - self.w_axis[0]
        hm = self.m_axis[1] - self.m_axis[0]
        g0 = np.gradient(self.offsets, hw, axis=0)
        g1 = np.gradient(self.offsets, hw, axis=1)
        g2 = (np.roll(self.offsets, -1, axis=2) - np.roll(self.offsets, 1, axis=2)) / (2 * hm)
        return float(np.max(np.hypot(g0, g1) + np.abs(g2)))

    def is_small(self) -> bool:
        return max(self.sup_offset(), self.lipschitz() / self.D) <= self.delta / 2


def _grid_eval(vals, w_axis, m_axis, w, m):
    padded = np.concatenate([vals, vals[..., :1]], axis=-1)
    rgi = RegularGridInterpolator((w_axis, w_axis, np.append(m_axis, 1.0)), padded,
                                  bounds_error=False, fill_value=None)
    q = np.stack(np.broadcast_arrays(w.real, w.imag, np.asarray(m, dtype=float) % 1.0), axis=-1)
    return rgi(q)


def global_stable_leaf(G: PerturbedMap, z: float, depth: int = 30, n_w: int = 9, n_m: int = 64,
                       delta: float | None = None, D: float | None = None, tol: float = 1e-13) -> GlobalStableLeaf:
    """Grid fixed point of the graph transform on ``F x M``-domain leaves.

    Leaves are pulled back along ``z, 2z, ..., 2^n z`` starting from the
    vertical leaf at the end; each node is a one-dimensional Newton solve in
    the angle.
    """
    _require_solenoid(G)
    base = G.base
    R = base.R
    if delta is None:
        delta = LeafSetup(G, n_x=3, n_m=8).delta
    if D is None:
        D = LeafSetup(G, n_x=3, n_m=8).D
    w_axis = np.linspace(-R, R, n_w)
    m_axis = np.arange(n_m) / n_m
    W = w_axis[:, None, None] + 1j * w_axis[None, :, None]
    W, M = np.broadcast_arrays(W, m_axis[None, None, :])
    W = W.copy()
    M = M.copy()
    zs = [float(z) % 1.0]
    for _ in range(depth):
        zs.append((2.0 * zs[-1]) % 1.0)
    offs = np.zeros(W.shape)
    for j in range(depth - 1, -1, -1):
        zj, znext = zs[j], zs[j + 1]

        def resid(y):
            X = np.stack([y % 1.0, W.real, W.imag], axis=-1)
            Xn, mn = G.forward(X, M)
            wn = Xn[..., 1] + 1j * Xn[..., 2]
            target = znext + _grid_eval(offs, w_axis, m_axis, wn, mn)
            return wrap(Xn[..., 0] - target)

        y = np.full(W.shape, zj)
        for _ in range(60):
            r = resid(y)
            if np.max(np.abs(r)) <= tol:
                break
            h = 1e-7
            dr = (resid(y + h) - r) / h
            y = y - r / dr
        else:
            raise GraphTransformError("pull-back failed at node")
        offs = wrap(y - zj)
    return GlobalStableLeaf(float(z) % 1.0, w_axis, m_axis, offs, R, float(D), float(delta))
