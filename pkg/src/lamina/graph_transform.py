"""Leaf functions on grids, the pointwise graph transform and its fixed point."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .base_dynamics import HyperbolicBase, wrap
from .skew_core import PerturbedMap, check_dominated_splitting

STABLE = "center-stable"
UNSTABLE = "center-unstable"
_ALIASES = {"s": STABLE, "stable": STABLE, STABLE: STABLE, "u": UNSTABLE, "unstable": UNSTABLE, UNSTABLE: UNSTABLE}


class GraphTransformError(RuntimeError):
    pass


def normalize_kind(kind: str) -> str:
    try:
        return _ALIASES[kind]
    except KeyError:
        raise GraphTransformError(f"unknown leaf kind {kind!r}") from None


def default_delta(rho: float) -> float:
    """Chart radius coupled to the perturbation size, with a floor and a cap."""
    return float(min(max(50.0 * rho, 1e-3), 0.1))


def default_D(L: float, mu: float) -> float:
    if mu * L >= 1.0:
        raise GraphTransformError("configuration error: mu * L >= 1, no admissible Lipschitz budget")
    return 4.0 * L / (1.0 - mu * L)


@dataclass(frozen=True)
class LeafGrid:
    """Regular lattice over ``[-delta, delta]^dim x S^1``; ``m`` nodes at ``j / n_m``."""

    delta: float
    dim: int
    n_x: int = 9
    n_m: int = 128

    @property
    def shape(self):
        return (self.n_x,) * self.dim + (self.n_m,)

    @property
    def x_axis(self):
        return np.linspace(-self.delta, self.delta, self.n_x)

    @property
    def m_axis(self):
        return np.arange(self.n_m) / self.n_m

    def nodes(self):
        """Node coordinates of shape ``shape + (dim + 1,)``."""
        axes = [self.x_axis] * self.dim + [self.m_axis]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def spacing(self):
        hx = 2 * self.delta / (self.n_x - 1) if self.n_x > 1 else np.inf
        return (hx,) * self.dim + (1.0 / self.n_m,)


def _batch_interpolator(values, grid: LeafGrid):
    """Multilinear interpolant of a batch ``(B,) + grid.shape + (out,)``; periodic in ``m``."""
    values = np.asarray(values, dtype=float)
    padded = np.concatenate([values, values[..., :1, :]], axis=-2)
    axes = [np.arange(values.shape[0], dtype=float)] + [grid.x_axis] * grid.dim + [np.append(grid.m_axis, 1.0)]
    rgi = RegularGridInterpolator(axes, padded, method="linear", bounds_error=False, fill_value=None)

    def evaluate(idx, x, m):
        x = np.asarray(x, dtype=float)
        q = np.concatenate([np.asarray(idx, dtype=float)[..., None], x, (np.asarray(m) % 1.0)[..., None]], axis=-1)
        return rgi(q)

    return evaluate


def _grid_lipschitz(values, grid: LeafGrid):
    """Max over nodes of the row sum of finite-difference partial norms."""
    total = 0.0
    spacing = grid.spacing
    ax0 = values.ndim - 1 - (grid.dim + 1)
    for a in range(grid.dim + 1):
        axis = ax0 + a
        h = spacing[a]
        if a == grid.dim:
            d = (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
        elif values.shape[axis] > 1:
            d = np.gradient(values, h, axis=axis)
        else:
            continue
        total = total + np.linalg.norm(d, axis=-1)
    return float(np.max(total)) if np.ndim(total) else 0.0


@dataclass
class TransformReport:
    sup_norm_out: float
    lip_out: float
    measured_ratio: float = float("nan")
    newton_iterations: int = 0
    max_residual: float = 0.0


@dataclass
class LeafFunction:
    """A center-stable or center-unstable leaf in the chart at ``point``.

    ``values`` has shape ``grid.shape + (out_dim,)``: unstable chart
    coordinates for a center-stable leaf, stable ones otherwise.
    """

    kind: str
    point: object
    grid: LeafGrid
    values: np.ndarray
    lip_budget: float
    error_bound: float = float("nan")
    report: TransformReport | None = None
    depth: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.grid.delta

    @property
    def out_dim(self) -> int:
        return self.values.shape[-1]

    def __call__(self, x, m):
        """Evaluate at domain coordinates ``x`` (``(..., dim)``) and fiber ``m``."""
        x = np.asarray(x, dtype=float)
        idx = np.zeros(x.shape[:-1])
        return _batch_interpolator(self.values[None], self.grid)(idx, x, m)

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=-1)))

    def lipschitz(self) -> float:
        return _grid_lipschitz(self.values, self.grid)

    def distance(self, other: "LeafFunction") -> float:
        return float(np.max(np.linalg.norm(self.values - other.values, axis=-1)))

    def is_admissible(self, slack: float = 1e-12) -> bool:
        return self.sup_norm() <= self.delta / 2 + slack and self.lipschitz() <= self.lip_budget + slack

    def with_values(self, values) -> "LeafFunction":
        return replace(self, values=np.asarray(values, dtype=float))


class LeafSetup:
    """Shared configuration for leaf computations over one perturbed map."""

    def __init__(self, G: PerturbedMap, delta: float | None = None, n_x: int = 9, n_m: int = 128,
                 D: float | None = None, L: float | None = None, check: bool = True):
        self.G = G
        self.base: HyperbolicBase = G.base
        rho = G.rho or 0.0
        self.delta = default_delta(rho) if delta is None else float(delta)
        if L is None:
            L = check_dominated_splitting(G.reference, n_base=16, n_fiber=32).L
        self.L = float(L)
        c = self.base.constants
        self.D = default_D(self.L, max(c.mu, c.lambda_)) if D is None else float(D)
        self.n_x = n_x
        self.n_m = n_m
        self.check = check

    def grid(self, kind: str) -> LeafGrid:
        kind = normalize_kind(kind)
        dim = self.base.stable_dim if kind == STABLE else self.base.unstable_dim
        return LeafGrid(self.delta, dim, self.n_x, self.n_m)

    @property
    def lip_budget(self) -> float:
        return self.D * self.delta / 2

    def zero_leaf(self, kind: str, point) -> LeafFunction:
        kind = normalize_kind(kind)
        g = self.grid(kind)
        out = self.base.unstable_dim if kind == STABLE else self.base.stable_dim
        return LeafFunction(kind, point, g, np.zeros(g.shape + (out,)), self.lip_budget)

    def random_leaf(self, kind: str, point, rng, fill: float = 0.8, n_modes: int = 3) -> LeafFunction:
        """Smooth random leaf using a fraction ``fill`` of both membership budgets."""
        leaf = self.zero_leaf(kind, point)
        g = leaf.grid
        nodes = g.nodes()
        vals = np.zeros(leaf.values.shape)
        for o in range(leaf.out_dim):
            for _ in range(n_modes):
                kx = rng.normal(size=g.dim) / g.delta
                km = rng.integers(-2, 3)
                ph = rng.uniform(0, 2 * np.pi)
                vals[..., o] += rng.uniform(-1, 1) * np.cos(nodes[..., :-1] @ kx + 2 * np.pi * km * nodes[..., -1] + ph)
        sup = np.max(np.linalg.norm(vals, axis=-1))
        vals *= fill * (g.delta / 2) / sup
        lip = _grid_lipschitz(vals, g)
        if lip > fill * leaf.lip_budget:
            vals *= fill * leaf.lip_budget / lip
        return leaf.with_values(vals)


def _assemble(kind, dom, val):
    return np.concatenate([dom, val], axis=-1) if kind == STABLE else np.concatenate([val, dom], axis=-1)


def _split(kind, chart_vec, k):
    s, u = chart_vec[..., :k], chart_vec[..., k:]
    return (s, u) if kind == STABLE else (u, s)


def _transform_batch(setup: LeafSetup, kind: str, src_point, dst_point, values_batch, *,
                     tol: float = 1e-10, maxiter: int = 50, fd_step: float = 1e-6):
    """Apply the graph transform to a batch of leaves sharing the same grid and chart.

    For a center-stable leaf ``src_point = h(dst_point)`` and the pull-back
    map is ``G^{-1}``; for a center-unstable leaf ``src_point = h^{-1}(dst_point)``
    and the map is ``G``.  Returns ``(new_values, iterations, max_residual)``.
    """
    base, G = setup.base, setup.G
    grid = setup.grid(kind)
    k = base.stable_dim
    B = values_batch.shape[0]
    nodes = np.broadcast_to(grid.nodes(), (B,) + grid.shape + (grid.dim + 1,)).reshape(B, -1, grid.dim + 1)
    idx = np.broadcast_to(np.arange(B)[:, None], nodes.shape[:2]).astype(float)
    target_x, target_m = nodes[..., :-1], nodes[..., -1]
    interp = _batch_interpolator(values_batch, grid)
    if kind == STABLE:
        pull, ref_guess = G.backward, G.reference.forward
    else:
        pull, ref_guess = G.forward, G.reference.backward

    # initial guess from the reference skew product
    X0 = base.chart_to_manifold(dst_point, _assemble(kind, target_x, np.zeros(nodes.shape[:2] + (base.chart_dim - grid.dim,))))
    Xg, mg = ref_guess(X0, target_m)
    w = np.concatenate([_split(kind, base.manifold_to_chart(src_point, Xg), k)[0], mg[..., None]], axis=-1)

    def residual(w):
        xd, m = w[..., :-1], w[..., -1]
        val = interp(idx, xd, m)
        Xs = base.chart_to_manifold(src_point, _assemble(kind, xd, val))
        Xo, mo = pull(Xs, m)
        c = base.manifold_to_chart(dst_point, Xo)
        dom, other = _split(kind, c, k)
        r = np.concatenate([dom - target_x, wrap(mo - target_m)[..., None]], axis=-1)
        return r, other

    d = grid.dim + 1
    r, other = residual(w)
    nr = np.max(np.abs(r), axis=-1)
    it = 0
    while np.max(nr) > tol and it < maxiter:
        it += 1
        act = nr > tol
        wa, ra = w[act], r[act]
        sub_idx = idx[act]

        def res_sub(wv):
            xd, m = wv[..., :-1], wv[..., -1]
            val = interp(sub_idx, xd, m)
            Xs = base.chart_to_manifold(src_point, _assemble(kind, xd, val))
            Xo, mo = pull(Xs, m)
            c = base.manifold_to_chart(dst_point, Xo)
            dom, oth = _split(kind, c, k)
            return np.concatenate([dom - target_x[act], wrap(mo - target_m[act])[..., None]], axis=-1), oth

        J = np.empty(wa.shape + (d,))
        for i in range(d):
            e = np.zeros(d)
            e[i] = fd_step
            J[..., i] = (res_sub(wa + e)[0] - ra) / fd_step
        try:
            step = np.linalg.solve(J, -ra[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise GraphTransformError("pull-back failed at node") from None
        t = np.ones(len(wa))
        na = np.max(np.abs(ra), axis=-1)
        for _ in range(30):
            wn = wa + t[:, None] * step
            rn, on = res_sub(wn)
            worse = np.max(np.abs(rn), axis=-1) > na
            if not worse.any():
                break
            t = np.where(worse, t / 2, t)
        w[act], r[act], other[act] = wn, rn, on
        nr = np.max(np.abs(r), axis=-1)
    max_res = float(np.max(nr))
    if not np.all(np.isfinite(nr)) or max_res > tol:
        raise GraphTransformError("pull-back failed at node")
    return other.reshape((B,) + grid.shape + (-1,)), it, max_res


def _orbit_neighbor(base, kind, b):
    return base.forward(b) if kind == STABLE else base.backward(b)


def graph_transform_step(leaf_src: LeafFunction, b, G_or_setup, **kw) -> LeafFunction:
    """Pull a leaf at ``h(b)`` (stable) or ``h^{-1}(b)`` (unstable) back to a leaf at ``b``.

    ``G_or_setup`` is a :class:`LeafSetup` or a perturbed map (a setup with
    default options is then built around it).
    """
    setup = G_or_setup if isinstance(G_or_setup, LeafSetup) else LeafSetup(G_or_setup, delta=leaf_src.delta,
                                                                         n_x=leaf_src.grid.n_x, n_m=leaf_src.grid.n_m)
    kind = normalize_kind(leaf_src.kind)
    vals, it, res = _transform_batch(setup, kind, leaf_src.point, b, leaf_src.values[None], **kw)
    out = LeafFunction(kind, b, leaf_src.grid, vals[0], setup.lip_budget, depth=leaf_src.depth + 1)
    out.report = TransformReport(out.sup_norm(), out.lipschitz(), newton_iterations=it, max_residual=res)
    if setup.check:
        _check_membership(out)
    return out


def _check_membership(leaf: LeafFunction):
    if not leaf.is_admissible(slack=1e-9):
        name = "B^s" if leaf.kind == STABLE else "B^u"
        raise GraphTransformError(f"left invariant set {name}")


def transform_pair(setup: LeafSetup, kind: str, b, leaves_src) -> tuple[list, np.ndarray]:
    """Transform several leaves at the same source point; returns new leaves and pair ratios.

    Ratios are computed for consecutive pairs ``(0, 1), (2, 3), ...``.
    """
    kind = normalize_kind(kind)
    src = leaves_src[0].point
    batch = np.stack([lf.values for lf in leaves_src])
    vals, it, res = _transform_batch(setup, kind, src, b, batch)
    out = []
    for v in vals:
        lf = LeafFunction(kind, b, leaves_src[0].grid, v, setup.lip_budget)
        lf.report = TransformReport(lf.sup_norm(), lf.lipschitz(), newton_iterations=it, max_residual=res)
        if setup.check:
            _check_membership(lf)
        out.append(lf)
    ratios = []
    for i in range(0, len(out) - 1, 2):
        den = leaves_src[i].distance(leaves_src[i + 1])
        ratios.append(out[i].distance(out[i + 1]) / den if den > 0 else 0.0)
    for i, r in enumerate(ratios):
        out[2 * i].report.measured_ratio = out[2 * i + 1].report.measured_ratio = r
    return out, np.array(ratios)


def solve_leaf_chain(kind: str, b, setup: LeafSetup, depth: int, keep: int = 1, probe: bool = True):
    """Finite-depth fixed point along the orbit of ``b``.

    Starts from the zero leaf at ``h^{depth}(b)`` (``h^{-depth}(b)`` for
    center-unstable leaves) and pulls back ``depth`` times.  Returns the
    leaves at the last ``keep`` orbit points, nearest to ``b`` first: the
    leaf at ``b`` (depth ``n``), at ``h^{+-1}(b)`` (depth ``n-1``), ...
    """
    kind = normalize_kind(kind)
    base = setup.base
    orbit = [b]
    for _ in range(depth):
        orbit.append(_orbit_neighbor(base, kind, orbit[-1]))
    leaf = setup.zero_leaf(kind, orbit[-1])
    chain = [leaf]
    ratio = float("nan")
    for j in range(depth - 1, -1, -1):
        dst = orbit[j]
        if probe and j == 0 and setup.G.rho:
            # contraction probe on the final step: current leaf against a shifted copy
            rng = np.random.default_rng(0)
            other = setup.random_leaf(kind, leaf.point, rng, fill=0.5)
            pair = [leaf, leaf.with_values(0.5 * (leaf.values + other.values))]
            outs, ratios = transform_pair(setup, kind, dst, pair)
            new = outs[0]
            ratio = float(ratios[0])
        else:
            new = graph_transform_step(leaf, dst, setup)
        new.depth = depth - j
        leaf = new
        chain.append(leaf)
        if len(chain) > keep:
            chain.pop(0)
    if setup.G.rho == 0 or depth == 0:
        ratio = 0.0 if depth else float("nan")
    for lf in chain:
        nominal = max(base.constants.mu, base.constants.lambda_) + 10 * setup.delta
        r = ratio if np.isfinite(ratio) else nominal
        lf.error_bound = r ** lf.depth * setup.delta / 2
        if lf.report is not None and np.isfinite(ratio):
            lf.report.measured_ratio = ratio
    return chain[::-1]


def solve_invariant_leaf(kind: str, b, G_or_setup, depth: int, **setup_kw) -> LeafFunction:
    """Approximate the invariant center-stable/center-unstable leaf at ``b``."""
    setup = G_or_setup if isinstance(G_or_setup, LeafSetup) else LeafSetup(G_or_setup, **setup_kw)
    return solve_leaf_chain(kind, b, setup, depth, keep=1)[0]


def contraction_sweep(setup: LeafSetup, points, pairs_per_point: int = 5, kind: str = "s", seed: int = 0,
                      threads: int = 1) -> np.ndarray:
    """Measured contraction ratios for random admissible leaf pairs at each base point.

    Returns an array of shape ``(len(points), pairs_per_point)``.
    """
    kind = normalize_kind(kind)
    base = setup.base

    def one(i):
        b = points[i]
        rng = np.random.default_rng([seed, i])
        src = _orbit_neighbor(base, kind, b)
        leaves = [setup.random_leaf(kind, src, rng) for _ in range(2 * pairs_per_point)]
        return transform_pair(setup, kind, b, leaves)[1]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(one, range(len(points))))
    else:
        rows = [one(i) for i in range(len(points))]
    return np.array(rows)


@dataclass
class HorizontalMapReport:
    lipschitz: float
    L: float
    leaf_lipschitz: float
    delta: float

    @property
    def implied_constant(self) -> float:
        """Smallest ``C`` with ``lipschitz <= (L + C delta)(1 + Lip leaf)``."""
        return max(0.0, (self.lipschitz / (1 + self.leaf_lipschitz) - self.L) / self.delta)


def horizontal_map(leaf: LeafFunction, G: PerturbedMap):
    """Grid values of ``(x, m) -> pi_sc(G(graph(leaf)(x, m)))`` in the chart at ``h(b)``.

    For center-unstable leaves ``G^{-1}`` and ``h^{-1}(b)`` are used.  Values
    have shape ``grid.shape + (dim + 1,)``; the last component is the fiber
    coordinate lifted continuously along ``m``.
    """
    base = G.base
    kind = normalize_kind(leaf.kind)
    k = base.stable_dim
    b = leaf.point
    nodes = leaf.grid.nodes()
    X = base.chart_to_manifold(b, _assemble(kind, nodes[..., :-1], leaf.values))
    if kind == STABLE:
        Xo, mo = G.forward(X, nodes[..., -1])
        dst = base.forward(b)
    else:
        Xo, mo = G.backward(X, nodes[..., -1])
        dst = base.backward(b)
    dom = _split(kind, base.manifold_to_chart(dst, Xo), k)[0]
    m_lift = nodes[..., -1] + wrap(mo - nodes[..., -1])
    return np.concatenate([dom, m_lift[..., None]], axis=-1)


def _map_lipschitz(values, grid):
    # sup-norm target: max over components of row sums
    best = 0.0
    spacing = grid.spacing
    for c in range(values.shape[-1]):
        tot = 0.0
        for a in range(grid.dim + 1):
            h = spacing[a]
            if a == grid.dim:
                d = wrap(np.roll(values[..., c], -1, axis=a) - np.roll(values[..., c], 1, axis=a)) / (2 * h)
            elif values.shape[a] > 1:
                d = np.gradient(values[..., c], h, axis=a)
            else:
                continue
            tot = tot + np.abs(d)
        best = max(best, float(np.max(tot)))
    return best


def measure_horizontal_map(leaf: LeafFunction, G: PerturbedMap, L: float | None = None) -> HorizontalMapReport:
    """Lipschitz estimate of the induced horizontal map of a leaf."""
    if L is None:
        L = check_dominated_splitting(G.reference, n_base=16, n_fiber=32).L
    vals = horizontal_map(leaf, G)
    return HorizontalMapReport(_map_lipschitz(vals, leaf.grid), float(L), leaf.lipschitz(), leaf.delta)
