"""Hyperbolic base maps: the Smale-Williams solenoid and linear torus Anosov maps.

All vectorized routines act on *coordinate arrays* with the coordinate axis
last.  Solenoid coordinates are ``(y, Re z, Im z)``; torus coordinates are
``(x1, x2)``.  Attractor points additionally carry enough symbolic data to be
iterated backwards.

Charts put the stable coordinates first: a chart vector is ``[x_s, x_u]``.
Both built-in bases are straightened exactly by their charts, so the local
representative of ``h`` is the constant block-diagonal matrix
``diag(A_s, A_u)``.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np


class BaseDynamicsError(ValueError):
    pass


def wrap(x):
    """Representative of ``x`` mod 1 in ``[-1/2, 1/2)``."""
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class HyperbolicConstants:
    lambda_minus: float
    lambda_: float
    mu_minus: float
    mu: float

    def __post_init__(self):
        for name in ("lambda_minus", "lambda_", "mu_minus", "mu"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise BaseDynamicsError(f"{name}={v} must lie in (0, 1)")
        if self.lambda_minus > self.lambda_ or self.mu_minus > self.mu:
            raise BaseDynamicsError("need lambda_minus <= lambda and mu_minus <= mu")

    @property
    def chart_factor(self) -> float:
        """A factor strictly above ``max(1/lambda_minus, 1/mu_minus)``."""
        return 1.01 * max(1.0 / self.lambda_minus, 1.0 / self.mu_minus)


@dataclass(frozen=True)
class SolenoidPoint:
    """Point of the solenoid attractor: circle angle plus backward itinerary.

    ``past[0]`` is the symbol consumed by the most recent application of
    ``h``: the preimage angle is ``(angle + past[0]) / 2``.
    """

    angle: float
    past: tuple[int, ...]
    lam: float = 0.05
    n_terms: int = 16

    @property
    def z(self) -> complex:
        return complex(solenoid_unstable_curve(self.angle, self.past, 0.0, self.lam, self.n_terms))

    @property
    def coords(self) -> np.ndarray:
        z = self.z
        return np.array([self.angle, z.real, z.imag])


@dataclass(frozen=True)
class TorusPoint:
    x: tuple[float, float]

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.x, dtype=float)


def solenoid_unstable_curve(angle, past, t, lam, n_terms=16):
    """z-coordinate of the local unstable curve through ``(angle, past)``.

    Evaluated at angle offset ``t`` (array-like).  ``past`` symbols beyond
    ``n_terms`` only contribute below ``lam**n_terms``.
    """
    t = np.asarray(t, dtype=float)
    y = angle + t
    z = np.zeros(t.shape, dtype=complex)
    scale = 1.0
    for s in past[:n_terms]:
        y = (y + s) / 2.0
        z = z + scale * np.exp(2j * np.pi * y)
        scale *= lam
    return z


def solenoid_unstable_slope(angle, past, t, lam, n_terms=16):
    """Derivative of :func:`solenoid_unstable_curve` with respect to ``t``."""
    t = np.asarray(t, dtype=float)
    y = angle + t
    dz = np.zeros(t.shape, dtype=complex)
    scale = 1.0
    dy = 1.0
    for s in past[:n_terms]:
        y = (y + s) / 2.0
        dy /= 2.0
        dz = dz + scale * 2j * np.pi * dy * np.exp(2j * np.pi * y)
        scale *= lam
    return dz


class HyperbolicBase(abc.ABC):
    """A hyperbolic base map ``h`` with explicit charts and local product structure."""

    name: str
    coord_dim: int
    stable_dim: int
    unstable_dim: int
    constants: HyperbolicConstants
    #: per-coordinate flag, True for coordinates taken mod 1
    periodic: np.ndarray

    @property
    def chart_dim(self) -> int:
        return self.stable_dim + self.unstable_dim

    # vectorized maps on coordinate arrays
    @abc.abstractmethod
    def map_coords(self, X: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def inverse_coords(self, X: np.ndarray) -> np.ndarray: ...

    # attractor points
    @abc.abstractmethod
    def forward(self, point): ...

    @abc.abstractmethod
    def backward(self, point): ...

    @abc.abstractmethod
    def random_point(self, rng: np.random.Generator, depth: int = 64): ...

    @abc.abstractmethod
    def chart_to_manifold(self, point, chart_vec: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def manifold_to_chart(self, point, X: np.ndarray) -> np.ndarray: ...

    def to_chart(self, point, X, radius: float = 0.5) -> np.ndarray:
        """``manifold_to_chart`` restricted to the chart ball of the given radius."""
        v = np.asarray(self.manifold_to_chart(point, X))
        if np.any(np.max(np.abs(v), axis=-1) > radius):
            raise BaseDynamicsError("out of chart")
        return v

    @abc.abstractmethod
    def product_point(self, b, b2, delta: float = 0.05): ...

    @property
    @abc.abstractmethod
    def stable_matrix(self) -> np.ndarray:
        """``A_s``: the local representative of ``dh`` on the stable coordinates."""

    @property
    @abc.abstractmethod
    def unstable_matrix(self) -> np.ndarray:
        """``A_u``: the local representative of ``dh`` on the unstable coordinates."""

    @property
    @abc.abstractmethod
    def product_constant(self) -> float:
        """``C`` with ``d(b,b*) + d(b',b*) <= C d(b,b')``."""

    def coords(self, point) -> np.ndarray:
        return point.coords

    def apply(self, point, direction: str = "forward"):
        if direction == "forward":
            return self.forward(point)
        if direction == "backward":
            return self.backward(point)
        raise BaseDynamicsError(f"unknown direction {direction!r}")

    def orbit(self, point, n: int, direction: str = "forward") -> list:
        pts = [point]
        for _ in range(n):
            pts.append(self.apply(pts[-1], direction))
        return pts

    def coord_diff(self, X1, X2) -> np.ndarray:
        d = np.asarray(X1, dtype=float) - np.asarray(X2, dtype=float)
        return np.where(self.periodic, wrap(d), d)

    @abc.abstractmethod
    def distance(self, X1, X2) -> np.ndarray: ...

    def point_distance(self, b, b2) -> float:
        return float(self.distance(b.coords, b2.coords))

    def manifold_contraction_rates(self, b, b2, n: int, direction: str = "forward"):
        """Per-step distance ratios along the orbits of a pair of coordinate points.

        ``direction="forward"`` is the stable case (iterate ``h``); ``"backward"``
        iterates ``h^-1`` for unstable pairs.
        """
        X1 = np.asarray(getattr(b, "coords", b), dtype=float)
        X2 = np.asarray(getattr(b2, "coords", b2), dtype=float)
        step = self.map_coords if direction == "forward" else self.inverse_coords
        ratios = []
        d = float(self.distance(X1, X2))
        for _ in range(n):
            X1, X2 = step(X1), step(X2)
            d_new = float(self.distance(X1, X2))
            ratios.append(d_new / d)
            d = d_new
        return np.array(ratios)


class Solenoid(HyperbolicBase):
    """``h(y, z) = (2y, exp(2 pi i y) + lam z)`` on the solid torus ``S^1 x D_R``."""

    name = "solenoid"
    coord_dim = 3
    stable_dim = 2
    unstable_dim = 1

    def __init__(self, lam: float = 0.05, R: float = 2.0, n_terms: int = 16):
        if not 0.0 < lam < 0.5:
            raise BaseDynamicsError("solenoid needs 0 < lam < 1/2")
        if R * lam ** n_terms >= 1e-12:
            raise BaseDynamicsError("n_terms too small for the requested truncation error")
        self.lam = lam
        self.R = R
        self.n_terms = n_terms
        self.constants = HyperbolicConstants(lam, lam, 0.5, 0.5)
        self.periodic = np.array([True, False, False])

    def __repr__(self):
        return f"Solenoid(lam={self.lam}, R={self.R})"

    @property
    def stable_matrix(self):
        return self.lam * np.eye(2)

    @property
    def unstable_matrix(self):
        return np.array([[2.0]])

    @property
    def product_constant(self) -> float:
        slope = np.pi / (1.0 - self.lam / 2.0)
        return 1.0 + 2.0 * max(1.0, slope)

    def map_coords(self, X):
        X = np.asarray(X, dtype=float)
        y = X[..., 0]
        z = X[..., 1] + 1j * X[..., 2]
        zn = np.exp(2j * np.pi * y) + self.lam * z
        return np.stack([(2.0 * y) % 1.0, zn.real, zn.imag], axis=-1)

    def inverse_coords(self, X):
        """Inverse on ``h(B)``; the branch is the one whose disk contains ``z``."""
        X = np.asarray(X, dtype=float)
        y = X[..., 0] % 1.0
        z = X[..., 1] + 1j * X[..., 2]
        y0 = y / 2.0
        c0 = np.exp(2j * np.pi * y0)
        yb = np.where(np.abs(z - c0) <= np.abs(z + c0), y0, y0 + 0.5)
        zb = (z - np.exp(2j * np.pi * yb)) / self.lam
        return np.stack([yb, zb.real, zb.imag], axis=-1)

    def distance(self, X1, X2):
        X1 = np.asarray(X1, dtype=float)
        X2 = np.asarray(X2, dtype=float)
        dy = np.abs(wrap(X1[..., 0] - X2[..., 0]))
        dz = np.hypot(X1[..., 1] - X2[..., 1], X1[..., 2] - X2[..., 2])
        return np.maximum(dy, dz)

    def point(self, angle: float, past) -> SolenoidPoint:
        return SolenoidPoint(float(angle) % 1.0, tuple(int(s) for s in past), self.lam, self.n_terms)

    def forward(self, point: SolenoidPoint) -> SolenoidPoint:
        s = int(np.floor(2.0 * point.angle)) % 2
        return SolenoidPoint((2.0 * point.angle) % 1.0, (s,) + point.past, self.lam, self.n_terms)

    def backward(self, point: SolenoidPoint) -> SolenoidPoint:
        if not point.past:
            raise BaseDynamicsError("insufficient itinerary depth")
        s = point.past[0]
        return SolenoidPoint((point.angle + s) / 2.0, point.past[1:], self.lam, self.n_terms)

    def random_point(self, rng, depth: int = 64) -> SolenoidPoint:
        past = tuple(int(s) for s in rng.integers(0, 2, size=depth))
        return SolenoidPoint(float(rng.random()), past, self.lam, self.n_terms)

    def curve(self, point, t):
        return solenoid_unstable_curve(point.angle, point.past, t, self.lam, self.n_terms)

    def chart_to_manifold(self, point, chart_vec):
        """``(x_s, x_u) -> (y_b + x_u, Z_b(x_u) + x_s)`` with ``Z_b`` the unstable curve."""
        v = np.asarray(chart_vec, dtype=float)
        xu = v[..., 2]
        z = self.curve(point, xu) + v[..., 0] + 1j * v[..., 1]
        return np.stack([(point.angle + xu) % 1.0, z.real, z.imag], axis=-1)

    def manifold_to_chart(self, point, X):
        X = np.asarray(X, dtype=float)
        xu = wrap(X[..., 0] - point.angle)
        zs = X[..., 1] + 1j * X[..., 2] - self.curve(point, xu)
        return np.stack([zs.real, zs.imag, xu], axis=-1)

    def frames(self, point):
        """Stable and unstable frames at ``point`` in ``(y, Re z, Im z)``."""
        dz = complex(solenoid_unstable_slope(point.angle, point.past, 0.0, self.lam, self.n_terms))
        stable = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        unstable = np.array([[1.0, dz.real, dz.imag]])
        return stable, unstable

    def product_point(self, b, b2, delta: float = 0.05):
        """``V^u_b`` meets ``V^s_{b2} = {y(b2)} x D``: angle of ``b2``, itinerary of ``b``."""
        if self.point_distance(b, b2) > delta:
            raise BaseDynamicsError("points not local")
        t = float(wrap(b2.angle - b.angle))
        # same itinerary as b, moved along its unstable curve; past symbols are
        # unchanged as long as the shift does not cross the branch cut
        return SolenoidPoint((b.angle + t) % 1.0, _shift_past(b.angle, t, b.past), self.lam, self.n_terms)

    def shift_along_unstable(self, point, t: float) -> SolenoidPoint:
        return SolenoidPoint((point.angle + t) % 1.0, _shift_past(point.angle, t, point.past), self.lam, self.n_terms)

    def projection(self, X):
        """``pi: B -> S^1``, the angle."""
        return np.asarray(X, dtype=float)[..., 0] % 1.0


def _shift_past(angle: float, t: float, past: tuple[int, ...]) -> tuple[int, ...]:
    # Moving continuously along the unstable curve from angle to angle + t.
    # If the lift angle + t leaves [0, 1), the representative angle wraps by an
    # integer k and the preimage digits must absorb it: y_{-1} = (a + t + s)/2
    # must stay continuous, so the new first symbol is s + k, carried further
    # down the itinerary in base 2.
    k = int(np.floor(angle + t))
    if k == 0:
        return past
    out = list(past)
    carry = k
    for i, s in enumerate(out):
        v = s + carry
        out[i] = v % 2
        carry = v // 2
        if carry == 0:
            break
    return tuple(out)


class TorusAnosov(HyperbolicBase):
    """Linear hyperbolic toral automorphism ``x -> A x mod 1`` with symmetric ``A``."""

    name = "anosov"
    coord_dim = 2
    stable_dim = 1
    unstable_dim = 1

    def __init__(self, matrix=((2, 1), (1, 1))):
        A = np.array(matrix, dtype=float)
        if A.shape != (2, 2) or not np.allclose(A, np.round(A)):
            raise BaseDynamicsError("need an integer 2x2 matrix")
        if abs(round(np.linalg.det(A))) != 1:
            raise BaseDynamicsError("matrix must be unimodular")
        if not np.allclose(A, A.T):
            raise BaseDynamicsError("only symmetric matrices have orthogonal eigen-frames")
        w, V = np.linalg.eigh(A)
        if not (abs(w[0]) < 1.0 < abs(w[1])):
            raise BaseDynamicsError("matrix is not hyperbolic")
        self.matrix = A
        self.inverse_matrix = np.round(np.linalg.inv(A))
        self.eig_s, self.eig_u = float(w[0]), float(w[1])
        self.e_s, self.e_u = V[:, 0], V[:, 1]
        lam = abs(self.eig_s)
        mu = 1.0 / abs(self.eig_u)
        self.constants = HyperbolicConstants(lam, lam, mu, mu)
        self.periodic = np.array([True, True])

    def __repr__(self):
        return f"TorusAnosov({self.matrix.astype(int).tolist()})"

    def inverse(self) -> "TorusAnosov":
        """The time-reversed base; stable and unstable directions swap."""
        return TorusAnosov(self.inverse_matrix)

    @property
    def stable_matrix(self):
        return np.array([[self.eig_s]])

    @property
    def unstable_matrix(self):
        return np.array([[self.eig_u]])

    @property
    def product_constant(self) -> float:
        return float(np.sqrt(2.0))

    def map_coords(self, X):
        return (np.asarray(X, dtype=float) @ self.matrix.T) % 1.0

    def inverse_coords(self, X):
        return (np.asarray(X, dtype=float) @ self.inverse_matrix.T) % 1.0

    def distance(self, X1, X2):
        d = wrap(np.asarray(X1, dtype=float) - np.asarray(X2, dtype=float))
        return np.sqrt(np.sum(d * d, axis=-1))

    def point(self, x1: float, x2: float) -> TorusPoint:
        return TorusPoint((float(x1) % 1.0, float(x2) % 1.0))

    def forward(self, point):
        x = self.map_coords(point.coords)
        return TorusPoint((float(x[0]), float(x[1])))

    def backward(self, point):
        x = self.inverse_coords(point.coords)
        return TorusPoint((float(x[0]), float(x[1])))

    def random_point(self, rng, depth: int = 64):
        x = rng.random(2)
        return TorusPoint((float(x[0]), float(x[1])))

    def chart_to_manifold(self, point, chart_vec):
        v = np.asarray(chart_vec, dtype=float)
        X = point.coords + v[..., :1] * self.e_s + v[..., 1:2] * self.e_u
        return X % 1.0

    def manifold_to_chart(self, point, X):
        d = wrap(np.asarray(X, dtype=float) - point.coords)
        return np.stack([d @ self.e_s, d @ self.e_u], axis=-1)

    def frames(self, point):
        return self.e_s[None, :], self.e_u[None, :]

    def product_point(self, b, b2, delta: float = 0.05):
        if self.point_distance(b, b2) > delta:
            raise BaseDynamicsError("points not local")
        d = wrap(b2.coords - b.coords)
        x = b.coords + (d @ self.e_u) * self.e_u
        x = x % 1.0
        return TorusPoint((float(x[0]), float(x[1])))

    def shift_along_unstable(self, point, t: float) -> TorusPoint:
        x = (point.coords + t * self.e_u) % 1.0
        return TorusPoint((float(x[0]), float(x[1])))


def circle_doubling(y):
    """The expanding factor ``y -> 2y mod 1`` of the solenoid."""
    return np.mod(2.0 * np.asarray(y, dtype=float), 1.0)


def make_base(kind: str = "solenoid", **kwargs) -> HyperbolicBase:
    if kind == "solenoid":
        return Solenoid(**kwargs)
    if kind == "anosov":
        return TorusAnosov(**kwargs)
    raise BaseDynamicsError(f"unknown base {kind!r}")
