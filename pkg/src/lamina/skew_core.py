"""Skew products over hyperbolic bases and their small perturbations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base_dynamics import HyperbolicBase, wrap


class SkewError(ValueError):
    pass


def _circle_newton(fwd, dfwd, target, guess, tol=1e-14, maxiter=50):
    """Solve ``fwd(m) = target`` (mod 1) for a degree-one circle map, vectorized."""
    m = np.array(guess, dtype=float)
    for _ in range(maxiter):
        r = wrap(fwd(m) - target)
        if np.all(np.abs(r) <= tol):
            break
        m = m - r / dfwd(m)
    return m % 1.0


class FiberFamily:
    """A family ``m -> f_b(m)`` of circle diffeomorphisms parameterized by base coordinates.

    ``forward(X, m)`` must be vectorized over matching leading shapes.  When no
    inverse is given it is computed by Newton's method on the lift.
    """

    def __init__(self, forward: Callable, inverse: Callable | None = None, fd_step: float = 1e-7):
        self._forward = forward
        self._inverse = inverse
        self.fd_step = fd_step

    def forward(self, X, m):
        return np.asarray(self._forward(X, m), dtype=float) % 1.0

    def dm(self, X, m):
        h = self.fd_step
        return wrap(self.forward(X, m + h) - self.forward(X, m - h)) / (2 * h)

    def inverse(self, X, m):
        if self._inverse is not None:
            return np.asarray(self._inverse(X, m), dtype=float) % 1.0
        m = np.asarray(m, dtype=float)
        X = np.asarray(X, dtype=float)
        return _circle_newton(lambda t: self.forward(X, t), lambda t: self.dm(X, t), m, m)


class TrigFiberFamily(FiberFamily):
    """``f_b(m) = m + a cos(2 pi y(b)) + eps0 sin(2 pi m)`` (``y`` is the first base coordinate)."""

    def __init__(self, a: float = 0.1, eps0: float = 0.03):
        if abs(2 * np.pi * eps0) >= 1.0:
            raise SkewError("not a fiber morphism: eps0 too large for invertibility")
        self.a = a
        self.eps0 = eps0
        super().__init__(self._f)

    def __repr__(self):
        return f"TrigFiberFamily(a={self.a}, eps0={self.eps0})"

    def _f(self, X, m):
        y = np.asarray(X, dtype=float)[..., 0]
        return m + self.a * np.cos(2 * np.pi * y) + self.eps0 * np.sin(2 * np.pi * m)

    def dm(self, X, m):
        return 1.0 + 2 * np.pi * self.eps0 * np.cos(2 * np.pi * np.asarray(m, dtype=float))

    def inverse(self, X, m):
        m = np.asarray(m, dtype=float)
        y = np.asarray(X, dtype=float)[..., 0]
        shift = self.a * np.cos(2 * np.pi * y)
        g = lambda t: t + self.eps0 * np.sin(2 * np.pi * t)  # noqa: E731
        return _circle_newton(g, lambda t: self.dm(None, t), m - shift, m - shift)


class IdentityFiberFamily(FiberFamily):
    def __init__(self):
        super().__init__(lambda X, m: np.asarray(m, dtype=float), lambda X, m: np.asarray(m, dtype=float))

    def dm(self, X, m):
        return np.ones_like(np.asarray(m, dtype=float))


class SkewProduct:
    """``F(b, m) = (h(b), f_b(m))`` on ``X = B x S^1``.

    Points of ``X`` are passed as a base coordinate array ``X`` (last axis is
    the coordinate axis) together with a fiber array ``m``.
    """

    def __init__(self, base: HyperbolicBase, fiber: FiberFamily):
        self.base = base
        self.fiber = fiber

    def __repr__(self):
        return f"SkewProduct({self.base!r}, {self.fiber!r})"

    def forward(self, X, m):
        X = np.asarray(X, dtype=float)
        return self.base.map_coords(X), self.fiber.forward(X, m)

    def backward(self, X, m):
        Xb = self.base.inverse_coords(X)
        return Xb, self.fiber.inverse(Xb, m)

    def validation_points(self, n_base: int = 64, n_fiber: int = 64, seed: int = 0):
        """Base samples near the attractor crossed with a uniform fiber grid."""
        rng = np.random.default_rng(seed)
        pts = [self.base.random_point(rng).coords for _ in range(n_base)]
        X = np.repeat(np.array(pts), n_fiber, axis=0)
        m = np.tile((np.arange(n_fiber) + 0.5) / n_fiber, n_base)
        return X, m


@dataclass
class SplittingReport:
    L: float
    threshold: float
    passed: bool
    sup_db: float
    sup_dm: float

    def __bool__(self):
        return self.passed


def _base_dual_norm(base, grad):
    # operator norm of a covector on the base tangent space
    if base.name == "solenoid":
        return np.abs(grad[..., 0]) + np.hypot(grad[..., 1], grad[..., 2])
    return np.sqrt(np.sum(grad * grad, axis=-1))


def _fiber_partials(base, fn, X, m, h=1e-6):
    d = X.shape[-1]
    grads = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        grads.append(wrap(fn(X + e, m) - fn(X - e, m)) / (2 * h))
    g = np.stack(grads, axis=-1)
    dm = wrap(fn(X, m + h) - fn(X, m - h)) / (2 * h)
    return _base_dual_norm(base, g), np.abs(dm)


def check_fiber_morphism(skew: SkewProduct, n_base: int = 16, n_fiber: int = 256, tol: float = 1e-10):
    """Raise ``SkewError`` unless every sampled ``f_b`` is a degree-one circle diffeomorphism."""
    X, m = skew.validation_points(n_base, n_fiber)
    fwd = skew.fiber.forward(X, m).reshape(n_base, n_fiber)
    steps = wrap(np.diff(np.concatenate([fwd, fwd[:, :1]], axis=1), axis=1))
    degree = np.sum(steps, axis=1)
    if np.any(steps <= 0) or np.any(np.abs(degree - 1.0) > 1e-8):
        raise SkewError("not a fiber morphism")
    back = skew.fiber.inverse(X, skew.fiber.forward(X, m))
    if np.max(np.abs(wrap(back - m))) > tol:
        raise SkewError("not a fiber morphism")


def check_dominated_splitting(skew: SkewProduct, n_base: int = 64, n_fiber: int = 64) -> SplittingReport:
    """Estimate ``L`` of the modified dominated splitting condition on a grid.

    ``L = max(max(lambda, mu) + sup|d f^{+-1}/db|, sup|d f^{+-1}/dm|)``; the
    verdict passes iff ``L < min(1/lambda, 1/mu)``.
    """
    check_fiber_morphism(skew)
    c = skew.base.constants
    X, m = skew.validation_points(n_base, n_fiber)
    db_f, dm_f = _fiber_partials(skew.base, skew.fiber.forward, X, m)
    db_i, dm_i = _fiber_partials(skew.base, skew.fiber.inverse, X, m)
    sup_db = float(max(db_f.max(), db_i.max()))
    sup_dm = float(max(dm_f.max(), dm_i.max()))
    L = max(max(c.lambda_, c.mu) + sup_db, sup_dm)
    threshold = min(1.0 / c.lambda_, 1.0 / c.mu)
    return SplittingReport(L, threshold, L < threshold, sup_db, sup_dm)


@dataclass
class ShearField:
    """Constant plus trigonometric scalar field of all coordinates except ``skip``."""

    wavevectors: np.ndarray
    phases: np.ndarray
    weights: np.ndarray
    skip: int | None
    offset: float = 0.0

    def __call__(self, Y):
        # Y holds base coords followed by the fiber coordinate
        if self.skip is not None:
            Y = np.delete(Y, self.skip, axis=-1)
        arg = 2 * np.pi * (Y @ self.wavevectors.T) + self.phases
        return self.offset + np.cos(arg) @ self.weights


def _make_field(rng, n_vars, skip, n_modes=3, offset=0.0):
    k = rng.integers(-1, 2, size=(n_modes, n_vars)).astype(float)
    for row in k:
        if not row.any():
            row[rng.integers(n_vars)] = 1.0
    phases = rng.uniform(0, 2 * np.pi, n_modes)
    # value and gradient bounded by 1 (gradient in the sup-dual norm)
    grad_scale = 2 * np.pi * np.abs(k).sum(axis=1)
    w = rng.uniform(0.5, 1.0, n_modes)
    w = (1.0 - offset) * w / np.sum(w * np.maximum(1.0, grad_scale))
    return ShearField(k, phases, w, skip, offset)


class PerturbedMap:
    """A map ``G`` of ``B x S^1`` close to a reference skew product, with its inverse."""

    def __init__(self, reference: SkewProduct, forward: Callable, backward: Callable, rho: float | None = None):
        self.reference = reference
        self._forward = forward
        self._backward = backward
        self.rho = rho

    @property
    def base(self):
        return self.reference.base

    def forward(self, X, m):
        return self._forward(np.asarray(X, dtype=float), np.asarray(m, dtype=float))

    def backward(self, X, m):
        return self._backward(np.asarray(X, dtype=float), np.asarray(m, dtype=float))

    @classmethod
    def unperturbed(cls, skew: SkewProduct) -> "PerturbedMap":
        return cls(skew, skew.forward, skew.backward, rho=0.0)

    @classmethod
    def from_forward(cls, skew: SkewProduct, forward: Callable, **newton) -> "PerturbedMap":
        """Perturbation given by its forward map only; the inverse is found by Newton."""
        return cls(skew, forward, lambda X, m: newton_inverse(skew, forward, X, m, **newton))


def _pack(base, X, m):
    return np.concatenate([X, np.asarray(m)[..., None]], axis=-1)


def _diff_packed(base, A, B):
    d = A - B
    per = np.append(base.periodic, True)
    return np.where(per, wrap(d), d)


def newton_inverse(skew: SkewProduct, forward: Callable, X, m, tol: float = 1e-12, maxiter: int = 50,
                   fd_step: float = 1e-7):
    """Invert ``forward`` near ``skew.backward`` by damped Newton with finite-difference Jacobian."""
    base = skew.base
    X = np.asarray(X, dtype=float)
    m = np.asarray(m, dtype=float)
    target = _pack(base, X, m)
    Xg, mg = skew.backward(X, m)
    w = _pack(base, Xg, mg)
    d = w.shape[-1]

    def resid(w):
        Xo, mo = forward(w[..., :-1], w[..., -1])
        return _diff_packed(base, _pack(base, Xo, mo), target)

    r = resid(w)
    for _ in range(maxiter):
        nr = np.max(np.abs(r), axis=-1)
        if np.all(nr <= tol):
            break
        J = np.empty(w.shape + (d,))
        for i in range(d):
            e = np.zeros(d)
            e[i] = fd_step
            J[..., i] = (resid(w + e) - r) / fd_step
        try:
            step = np.linalg.solve(J, -r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise SkewError("inverse construction failed") from None
        t = np.ones(nr.shape)
        for _ in range(20):
            w_new = w + t[..., None] * step
            r_new = resid(w_new)
            bad = np.max(np.abs(r_new), axis=-1) > nr
            if not np.any(bad):
                break
            t = np.where(bad, t / 2, t)
        w, r = w_new, r_new
    else:
        if np.max(np.abs(r)) > tol:
            raise SkewError("inverse construction failed")
    per = base.periodic
    Xo = np.where(per, w[..., :-1] % 1.0, w[..., :-1])
    return Xo, w[..., -1] % 1.0


def _shear_map(skew, fields, vfield, amps, eps):
    base = skew.base
    d = base.coord_dim

    def fwd(X, m):
        X, m = skew.forward(X, m)
        Y = _pack(base, X, m)
        for i, u in enumerate(fields):
            Y[..., i] = Y[..., i] + eps * amps[i] * u(Y)
        Y[..., d] = Y[..., d] + eps * vfield(Y)
        Y[..., :d] = np.where(base.periodic, Y[..., :d] % 1.0, Y[..., :d])
        return Y[..., :d], Y[..., d] % 1.0

    def bwd(X, m):
        Y = _pack(base, np.asarray(X, dtype=float), m)
        Y[..., d] = Y[..., d] - eps * vfield(Y)
        for i in reversed(range(d)):
            Y[..., i] = Y[..., i] - eps * amps[i] * fields[i](Y)
        Y[..., :d] = np.where(base.periodic, Y[..., :d] % 1.0, Y[..., :d])
        return skew.backward(Y[..., :d], Y[..., d] % 1.0)

    return PerturbedMap(skew, fwd, bwd)


STANDARD_RATIO = 1.0


def make_standard_perturbation(skew: SkewProduct, epsilon: float, seed: int = 0) -> PerturbedMap:
    """Deterministic ``epsilon``-perturbation built from explicitly invertible shears.

    ``G = S_m o S_{d-1} o ... o S_0 o F`` where ``S_i`` shifts base coordinate
    ``i`` by a multiple of ``u_i`` (a trigonometric field independent of
    coordinate ``i``) and ``S_m`` shifts the fiber by a multiple of ``v(b)``.
    On the solenoid the base shears carry an extra factor ``lambda``, since
    ``h^{-1}`` amplifies them by ``1/lambda``.  The overall amplitude is
    calibrated once per seed so that the measured C1 distance is close to
    ``STANDARD_RATIO * epsilon``.
    """
    if epsilon < 0:
        raise SkewError("epsilon must be non-negative")
    if epsilon == 0:
        return PerturbedMap.unperturbed(skew)
    if epsilon > 0.05:
        raise SkewError("perturbation too large")
    base = skew.base
    d = base.coord_dim
    rng = np.random.default_rng(seed)
    fields = [_make_field(rng, d, skip=i) for i in range(d)]
    # a constant fiber rotation keeps the C0 part of the fiber perturbation comparable to rho
    vfield = _make_field(rng, d, skip=d, offset=0.8)
    amps = np.full(d, base.lam) if base.name == "solenoid" else np.ones(d)
    probe = 1e-5
    scale = STANDARD_RATIO * probe / estimate_c1_distance(_shear_map(skew, fields, vfield, amps, probe))
    G = _shear_map(skew, fields, vfield, amps, scale * epsilon)
    G.epsilon = epsilon
    G.seed = seed
    G.rho = estimate_c1_distance(G)
    return G


def _jacobian(base, fn, X, m, h):
    P = _pack(base, X, m)
    d = P.shape[-1]
    cols = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        Xp, mp = fn(P[..., :-1] + e[:-1], P[..., -1] + e[-1])
        Xm, mm = fn(P[..., :-1] - e[:-1], P[..., -1] - e[-1])
        cols.append(_diff_packed(base, _pack(base, Xp, mp), _pack(base, Xm, mm)) / (2 * h))
    return np.stack(cols, axis=-1)


def estimate_c1_distance(G: PerturbedMap, n_base: int = 32, n_fiber: int = 32, fd_step: float = 1e-5,
                         seed: int = 1) -> float:
    """Grid sup of value distance plus finite-difference Jacobian distance, both directions.

    Jacobians are compared in the operator norm induced by the sup norm on
    ``(base coords, m)``.
    """
    F = G.reference
    base = F.base
    X, m = F.validation_points(n_base, n_fiber, seed=seed)
    out = 0.0
    for gf, ff, (Xs, ms) in ((G.forward, F.forward, (X, m)), (G.backward, F.backward, F.forward(X, m))):
        A = _pack(base, *gf(Xs, ms))
        B = _pack(base, *ff(Xs, ms))
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise SkewError("map evaluation failed")
        val = np.max(np.abs(_diff_packed(base, A, B)), axis=-1)
        JA = _jacobian(base, gf, Xs, ms, fd_step)
        JB = _jacobian(base, ff, Xs, ms, fd_step)
        jac = np.max(np.sum(np.abs(JA - JB), axis=-1), axis=-1)
        out = max(out, float(np.max(val + jac)))
    return out
