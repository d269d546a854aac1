"""Hölder exponents, box-counting dimension and the Falconer-type image bound."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import log

import numpy as np
from scipy import stats

from .symbolic_deviations import PatternAutomaton, count_atypical, is_atypical_count

DIMENSION_NOTE = "dimensions are box-counting estimates (upper bounds for Hausdorff dimension)"


class HolderError(ValueError):
    pass


def alpha_theoretical(constants=None, *, lambda_minus=None, lambda_=None, mu_minus=None, mu=None,
                      mode: str = "full") -> float:
    """Hölder exponent ``min(ln lambda / ln lambda_-, ln mu / ln mu_-)``.

    ``mode="stable"`` returns only ``ln mu / ln mu_-`` (the exponent for
    global center-stable leaves over an expanding factor).
    """
    if constants is not None:
        lambda_minus, lambda_, mu_minus, mu = (constants.lambda_minus, constants.lambda_,
                                                constants.mu_minus, constants.mu)
    vals = (lambda_minus, lambda_, mu_minus, mu)
    if any(v is None or not (0.0 < v < 1.0) for v in vals):
        raise HolderError("degenerate hyperbolicity constants")
    a_mu = log(mu) / log(mu_minus)
    if mode == "stable":
        return a_mu
    if mode != "full":
        raise HolderError(f"unknown mode {mode!r}")
    return min(log(lambda_) / log(lambda_minus), a_mu)


@dataclass
class HolderFit:
    samples: list
    slope: float
    intercept: float
    r_squared: float
    robust: bool = False

    @property
    def constant(self) -> float:
        return float(np.exp(self.intercept))


def fit_power_law(base_distances, leaf_distances, noise_floor: float = 1e-12, min_pairs: int = 30,
                  min_decades: float = 2.0, robust: bool = False) -> HolderFit:
    """Least-squares slope of ``log(leaf distance)`` against ``log(base distance)``."""
    d = np.asarray(base_distances, dtype=float)
    v = np.asarray(leaf_distances, dtype=float)
    keep = (d > 0) & (v > noise_floor) & np.isfinite(v)
    d, v = d[keep], v[keep]
    if len(d) < min_pairs:
        raise HolderError("insufficient signal")
    if np.log10(d.max() / d.min()) < min_decades:
        raise HolderError("pair distances span fewer than the required decades")
    x, y = np.log(d), np.log(v)
    lin = stats.linregress(x, y)
    slope, intercept = float(lin.slope), float(lin.intercept)
    if robust:
        slope, intercept, _, _ = (float(t) for t in stats.theilslopes(y, x))
    return HolderFit(list(zip(x.tolist(), y.tolist())), slope, intercept, float(lin.rvalue ** 2), robust)


def fit_holder_exponent(pair_sampler, leaf_distance, n_pairs: int | None = None, **kw) -> HolderFit:
    """Fit the exponent from ``(b, b', d(b, b'))`` triples and a leaf distance callable."""
    pairs = list(pair_sampler)
    if n_pairs is not None:
        pairs = pairs[:n_pairs]
    base_d = [p[2] for p in pairs]
    leaf_d = [leaf_distance(p[0], p[1]) for p in pairs]
    return fit_power_law(base_d, leaf_d, **kw)


def dyadic_unstable_pairs(base, points, j_range=range(4, 15)):
    """Pairs ``(b, b')`` with ``b'`` moved along the local unstable manifold by ``2^{-j}``."""
    for b in points:
        for j in j_range:
            b2 = base.shift_along_unstable(b, 2.0 ** (-j))
            yield b, b2, base.point_distance(b, b2)


# --- dyadic sets ------------------------------------------------------------------------


class DyadicSet:
    """A subset of the circle seen through its occupied dyadic intervals."""

    def boxes(self, N: int) -> np.ndarray:
        raise NotImplementedError

    def count(self, N: int) -> int:
        return int(len(self.boxes(N)))


class FullCircle(DyadicSet):
    def boxes(self, N):
        return np.arange(2 ** N, dtype=np.int64)

    def count(self, N):
        return 2 ** N


class PointSet(DyadicSet):
    def __init__(self, points):
        self.points = np.asarray(points, dtype=float) % 1.0

    def boxes(self, N):
        return np.unique(np.floor(np.ldexp(self.points, N)).astype(np.int64) % (2 ** N))


class PatternAvoidingSet(DyadicSet):
    """Points whose binary expansion never contains ``pattern``."""

    def __init__(self, pattern: str = "11"):
        self.automaton = PatternAutomaton(pattern)
        self._levels = {0: (np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))}

    def boxes(self, N):
        top = max(n for n in self._levels if n <= N)
        state, idx = self._levels[top]
        for n in range(top + 1, N + 1):
            st, ct, ix = self.automaton.extend(state, np.zeros_like(state), idx)
            keep = ct == 0
            state, idx = st[keep], ix[keep]
            self._levels[n] = (state, idx)
        return idx


class AtypicalCover(DyadicSet):
    """Dyadic intervals of depth ``N`` whose length-``N`` word is ``kappa,w``-atypical."""

    def __init__(self, w: str = "1", kappa: float = 0.1, max_enumeration: int = 26):
        self.w = w
        self.kappa = kappa
        self.automaton = PatternAutomaton(w)
        self.max_enumeration = max_enumeration
        self._level = (0, np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))

    def count(self, N):
        return count_atypical(self.w, self.kappa, N).atypical_count

    def _tables(self, N):
        n, state, cnt = self._level
        if N < n:
            n, state, cnt = 0, np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
        while n < N:
            state, cnt = self.automaton.extend(state, cnt)
            n += 1
        self._level = (n, state, cnt)
        return cnt

    def boxes(self, N):
        if N > self.max_enumeration:
            raise HolderError("enumeration depth exceeds the configured limit")
        cnt = self._tables(N)
        kap = Fraction(str(self.kappa))
        flag = np.array([is_atypical_count(c, N, self.w, kap) for c in range(N + 1)])
        return np.nonzero(flag[cnt])[0]


def _cover_ranges(lo, hi, N):
    """Boxes at depth ``N`` met by the lifted index ranges ``[lo, hi]`` (inclusive)."""
    M = 2 ** N
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    if np.any(hi - lo + 1 >= M):
        return np.arange(M, dtype=np.int64)
    a = lo % M
    b = a + (hi - lo)
    wrapped = b >= M
    # a wrapped range [a, b] is the union of [a, M - 1] and [0, b - M]
    starts = np.concatenate([a, np.zeros(int(wrapped.sum()), dtype=np.int64)])
    ends = np.concatenate([np.minimum(b, M - 1), b[wrapped] - M])
    diff = np.zeros(M + 1, dtype=np.int64)
    np.add.at(diff, starts, 1)
    np.add.at(diff, ends + 1, -1)
    return np.nonzero(np.cumsum(diff[:M]) > 0)[0]


class ImageSet(DyadicSet):
    """Image of a dyadic set under a circle map given by its lift.

    Boxes of the image at depth ``N`` are found from the source boxes at
    depth ``ceil(refine * N)`` (capped at ``max_source_depth``): each source
    box is sampled at ``samples_per_box + 1`` equally spaced points and its
    image covered by the range of the samples.  For an ``alpha``-Hölder map
    ``refine = 1 / alpha`` makes each source image about one box wide.
    """

    def __init__(self, source: DyadicSet, phi_lift, samples_per_box: int = 1, refine: float = 1.0,
                 max_source_depth: int | None = None):
        self.source = source
        self.phi_lift = phi_lift
        self.samples_per_box = samples_per_box
        self.refine = refine
        self.max_source_depth = max_source_depth

    def source_depth(self, N):
        n = int(np.ceil(self.refine * N - 1e-9))
        return n if self.max_source_depth is None else min(n, self.max_source_depth)

    def boxes(self, N):
        n_src = self.source_depth(N)
        idx = self.source.boxes(n_src)
        if len(idx) == 0:
            return idx
        s = self.samples_per_box
        out = []
        for chunk in np.array_split(idx, max(1, len(idx) // 2 ** 16)):
            t = (chunk[:, None] + np.arange(s + 1)[None, :] / s) * 2.0 ** (-n_src)
            vals = np.ldexp(np.asarray(self.phi_lift(t), dtype=float), N)
            out.append((np.floor(vals.min(axis=1)).astype(np.int64), np.floor(vals.max(axis=1)).astype(np.int64)))
        lo = np.concatenate([o[0] for o in out])
        hi = np.concatenate([o[1] for o in out])
        return _cover_ranges(lo, hi, N)


@dataclass
class BoxDimensionEstimate:
    depths: list
    counts: list
    slope: float
    intercept: float
    confidence: float
    monotone: bool = True
    note: str = field(default=DIMENSION_NOTE)


def box_dimension(dset: DyadicSet, depths=range(8, 25)) -> BoxDimensionEstimate:
    """Slope of ``log2 count(N)`` against ``N``; ``-inf`` for an empty set."""
    depths = list(depths)
    counts = [int(dset.count(N)) for N in depths]
    for N, c in zip(depths, counts):
        if c > 2 ** N:
            raise HolderError("box count exceeds 2^N")
    monotone = all(b >= a for a, b in zip(counts, counts[1:]))
    pos = [(N, c) for N, c in zip(depths, counts) if c > 0]
    if not pos:
        return BoxDimensionEstimate(depths, counts, float("-inf"), float("nan"), float("nan"), monotone)
    if len(pos) == 1:
        N, c = pos[0]
        return BoxDimensionEstimate(depths, counts, float(np.log2(c) / N), 0.0, float("nan"), monotone)
    x = np.array([p[0] for p in pos], dtype=float)
    y = np.log2(np.array([float(p[1]) for p in pos]))
    lin = stats.linregress(x, y)
    resid = y - (lin.slope * x + lin.intercept)
    return BoxDimensionEstimate(depths, counts, float(lin.slope), float(lin.intercept),
                                float(np.sqrt(np.mean(resid ** 2))), monotone)


@dataclass
class FalconerVerdict:
    dim_A: float
    dim_image: float
    alpha: float
    slack: float
    estimate_A: BoxDimensionEstimate
    estimate_image: BoxDimensionEstimate

    @property
    def bound(self) -> float:
        return self.dim_A / self.alpha + self.slack

    @property
    def passed(self) -> bool:
        return self.dim_image <= self.bound

    @property
    def measure_zero(self) -> bool:
        """Image dimension below one: the image is Lebesgue-null (box-count surrogate)."""
        return self.dim_image < 1.0


def falconer_check(A: DyadicSet, phi_lift, alpha: float, depths=range(8, 25), slack: float = 0.05,
                   samples_per_box: int = 1, refine: float = 1.0, max_source_depth: int | None = None,
                   image_depths=None) -> FalconerVerdict:
    """Compare ``dim(phi(A))`` with ``dim(A) / alpha``.

    ``refine`` and ``max_source_depth`` are passed to :class:`ImageSet`;
    ``image_depths`` defaults to ``depths``.
    """
    if not alpha > 0:
        raise HolderError("alpha must be positive")
    est_A = box_dimension(A, depths)
    img = ImageSet(A, phi_lift, samples_per_box, refine, max_source_depth)
    est_img = box_dimension(img, depths if image_depths is None else image_depths)
    return FalconerVerdict(est_A.slope, est_img.slope, float(alpha), slack, est_A, est_img)


def weierstrass_lift(alpha: float, c: float = 0.01, n_terms: int = 30):
    """Lift of ``z + c sum_k 2^{-alpha k} cos(2 pi 2^k z)``, an ``alpha``-Hölder circle map."""
    ks = np.arange(1, n_terms + 1)
    amp = c * 2.0 ** (-alpha * ks)
    freq = 2.0 ** ks

    def phi(z):
        z = np.asarray(z, dtype=float)
        out = z.copy()
        for a, f in zip(amp, freq):
            out += a * np.cos(2 * np.pi * f * z)
        return out

    return phi


def tabulated_lift(phi_values, z_nodes):
    """Periodic linear interpolant of a degree-one circle map sampled at ``z_nodes``."""
    z_nodes = np.asarray(z_nodes, dtype=float)
    off = np.asarray(phi_values, dtype=float) - z_nodes
    off = off - np.round(off)
    zp = np.concatenate([z_nodes, [z_nodes[0] + 1.0]])
    op = np.concatenate([off, [off[0]]])

    def phi(z):
        z = np.asarray(z, dtype=float)
        return z + np.interp(z % 1.0, zp, op)

    return phi


__all__ = [
    "AtypicalCover", "BoxDimensionEstimate", "DyadicSet", "FalconerVerdict", "FullCircle", "HolderError",
    "HolderFit", "ImageSet", "PatternAvoidingSet", "PointSet", "alpha_theoretical", "box_dimension",
    "dyadic_unstable_pairs", "falconer_check", "fit_holder_exponent", "fit_power_law", "tabulated_lift",
    "weierstrass_lift",
]
