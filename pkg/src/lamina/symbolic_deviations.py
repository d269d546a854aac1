"""Exact counting of pattern-frequency deviations in binary words."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, log2

import numpy as np
from scipy import integrate


class SymbolicError(ValueError):
    pass


def _check_word(w: str) -> str:
    if not w or any(c not in "01" for c in w):
        raise SymbolicError(f"pattern must be a non-empty binary word, got {w!r}")
    return w


class PatternAutomaton:
    """Knuth-Morris-Pratt automaton recognising overlapping occurrences of ``pattern``.

    States are ``0 .. n-1`` (length of the longest proper prefix of the
    pattern that is a suffix of the input).  ``step(state, bit)`` returns the
    next state and whether an occurrence ended at this bit.
    """

    def __init__(self, pattern: str):
        self.pattern = _check_word(pattern)
        n = len(pattern)
        fail = [0] * (n + 1)
        k = 0
        for i in range(1, n):
            while k and pattern[i] != pattern[k]:
                k = fail[k]
            if pattern[i] == pattern[k]:
                k += 1
            fail[i + 1] = k
        self.failure = fail
        nxt = np.zeros((n, 2), dtype=np.int64)
        match = np.zeros((n, 2), dtype=bool)
        for s in range(n):
            for bit in (0, 1):
                c = str(bit)
                t = s
                while t and pattern[t] != c:
                    t = fail[t]
                if pattern[t] == c:
                    t += 1
                if t == n:
                    match[s, bit] = True
                    t = fail[n]
                nxt[s, bit] = t
        self.transition = nxt
        self.match = match

    def __len__(self):
        return len(self.pattern)

    def step(self, state: int, bit: int):
        return int(self.transition[state, bit]), bool(self.match[state, bit])

    def count(self, bits) -> int:
        s, c = 0, 0
        for b in bits:
            s, hit = self.step(s, int(b))
            c += hit
        return c

    def extend(self, state, count, idx=None):
        """Children ``2i, 2i + 1`` of each word: ``(state, count[, idx])`` one digit longer."""
        st = self.transition[state].ravel()
        ct = (count[:, None] + self.match[state]).ravel()
        if idx is None:
            return st, ct
        return st, ct, (2 * idx[:, None] + np.arange(2)).ravel()

    def count_words(self, N: int, words=None) -> np.ndarray:
        """Occurrence counts for all ``2^N`` words (or the given word indices), vectorized.

        Word index ``i`` has digits ``omega_1 .. omega_N`` equal to the binary
        expansion of ``i`` from the most significant bit.
        """
        idx = np.arange(2 ** N, dtype=np.int64) if words is None else np.asarray(words, dtype=np.int64)
        state = np.zeros(idx.shape, dtype=np.int64)
        cnt = np.zeros(idx.shape, dtype=np.int64)
        for pos in range(N):
            bit = (idx >> (N - 1 - pos)) & 1
            cnt += self.match[state, bit]
            state = self.transition[state, bit]
        return cnt


def _digits(omega) -> list[int]:
    if isinstance(omega, str):
        return [int(c) for c in omega]
    return [int(b) for b in omega]


def frequency(omega_prefix, w: str, k: int) -> float:
    """``a_k``: overlapping occurrences of ``w`` ending within the first ``k`` digits, over ``k``."""
    if k <= 0:
        raise SymbolicError("frequency undefined for k = 0")
    digits = _digits(omega_prefix)
    if k > len(digits):
        raise SymbolicError("k exceeds the supplied prefix")
    return PatternAutomaton(w).count(digits[:k]) / k


def occurrence_counts(w: str, N: int) -> list[int]:
    """Exact number of length-``N`` words with each occurrence count ``c = 0..N``."""
    if N < 0 or N > 4096:
        raise SymbolicError("N must lie in [0, 4096]")
    aut = PatternAutomaton(w)
    n = len(aut)
    # dp[state][c] with python ints inside object arrays
    dp = np.zeros((n, N + 1), dtype=object)
    dp[0, 0] = 1
    for _ in range(N):
        new = np.zeros_like(dp)
        for s in range(n):
            row = dp[s]
            for bit in (0, 1):
                t = aut.transition[s, bit]
                if aut.match[s, bit]:
                    new[t, 1:] += row[:-1]
                else:
                    new[t] += row
        dp = new
    return [int(v) for v in dp.sum(axis=0)]


def _typical_window(w: str, kappa) -> tuple[Fraction, Fraction]:
    kap = Fraction(str(kappa)) if not isinstance(kappa, Fraction) else kappa
    centre = Fraction(1, 2 ** len(w))
    return centre - kap, centre + kap


def is_atypical_count(c: int, N: int, w: str, kappa) -> bool:
    lo, hi = _typical_window(w, kappa)
    f = Fraction(c, N)
    return f < lo or f > hi


@dataclass
class DeviationTable:
    w: str
    kappa: float
    N: int
    counts_by_occurrences: list
    atypical_count: int

    @property
    def nu(self) -> float:
        return 1.0 - log2(max(self.atypical_count, 1)) / self.N

    @property
    def total(self) -> int:
        return sum(self.counts_by_occurrences)


def count_atypical(w: str, kappa, N: int) -> DeviationTable:
    """Exact count of ``kappa,w``-atypical words of length ``N`` (frequency at ``k = N``)."""
    if kappa < 0:
        raise SymbolicError("kappa must be non-negative")
    if N <= 0:
        raise SymbolicError("N must be positive")
    counts = occurrence_counts(w, N)
    atyp = sum(v for c, v in enumerate(counts) if v and is_atypical_count(c, N, w, kappa))
    return DeviationTable(w, float(kappa), N, counts, atyp)


def count_atypical_bruteforce(w: str, kappa, N: int) -> int:
    """Enumerate all ``2^N`` words; independent of the transfer-matrix recursion."""
    # occurrences counted by direct substring comparison on bit windows
    n = len(_check_word(w))
    idx = np.arange(2 ** N, dtype=np.int64)
    target = int(w, 2)
    mask = (1 << n) - 1
    cnt = np.zeros(idx.shape, dtype=np.int64)
    for end in range(n, N + 1):
        window = (idx >> (N - end)) & mask
        cnt += window == target
    lo, hi = _typical_window(w, kappa)
    atyp = np.array([Fraction(int(v), N) < lo or Fraction(int(v), N) > hi for v in range(N + 1)])
    return int(np.sum(atyp[cnt]))


@dataclass
class NuCurve:
    w: str
    kappa: float
    Ns: list
    counts: list
    nus: list

    @property
    def nu_min(self) -> float:
        return min(self.nus)

    def bound_holds(self) -> bool:
        """``count(N) <= 2^{N(1 - nu_min)}`` for every ``N`` in the range."""
        return all(c <= 2 ** (N * (1 - self.nu_min)) * (1 + 1e-12) for N, c in zip(self.Ns, self.counts))

    def bounded_away(self, floor: float = 0.005) -> bool:
        return self.nu_min >= floor


def nu_estimate(w: str, kappa, N_range) -> NuCurve:
    Ns = list(N_range)
    tables = [count_atypical(w, kappa, N) for N in Ns]
    return NuCurve(w, float(kappa), Ns, [t.atypical_count for t in tables], [t.nu for t in tables])


def binomial_tail_count(N: int, kappa) -> int:
    """Atypical count for ``w = "1"`` from the binomial distribution directly."""
    lo, hi = _typical_window("1", kappa)
    return sum(comb(N, c) for c in range(N + 1) if Fraction(c, N) < lo or Fraction(c, N) > hi)


@dataclass
class CoverVolume:
    partial: float
    tail: float
    nu: float
    epsilon: float
    N0: int

    @property
    def total(self) -> float:
        return self.partial + self.tail


def cover_volume(counts: dict, epsilon: float, N0: int, nu: float | None = None,
                 include_tail: bool = True) -> CoverVolume:
    """``V_{1-eps}`` of the cover by atypical dyadic intervals of depths ``N >= N0``.

    ``counts`` maps depth to the number of intervals of radius ``2^{-N}``.
    Depths beyond the largest supplied one are bounded by the geometric tail
    ``2^{-(N+1)(nu - eps)} / (1 - 2^{eps - nu})``.
    """
    Ns = sorted(N for N in counts if N >= N0)
    part = sum(counts[N] * 2.0 ** (-N * (1 - epsilon)) for N in Ns)
    if nu is None:
        nus = [1 - log2(max(counts[N], 1)) / N for N in Ns if N > 0]
        nu = min(nus) if nus else 1.0
    tail = 0.0
    if include_tail and any(counts[N] for N in Ns):
        if epsilon >= nu:
            raise SymbolicError("divergent tail")
        start = (max(Ns) + 1) if Ns else N0
        tail = 2.0 ** (-start * (nu - epsilon)) / (1 - 2.0 ** (epsilon - nu))
    return CoverVolume(float(part), float(tail), float(nu), float(epsilon), int(N0))


def hausdorff_volume(radii, d: float) -> float:
    """``sum_j r_j^d`` for a cover by balls of radii ``r_j``."""
    r = np.asarray(radii, dtype=float)
    return float(np.sum(r ** d))


@dataclass
class WeakErgodicProfile:
    averages: np.ndarray
    integral: float
    delta: float

    @property
    def flags(self) -> np.ndarray:
        return np.abs(self.averages - self.integral) > self.delta

    @property
    def deviates(self) -> bool:
        return bool(self.flags.any())


def doubling_orbit(y, n: int) -> np.ndarray:
    """Angles ``2^i y mod 1`` for ``i < n``.

    ``y`` may be a float, a :class:`~fractions.Fraction` (exact orbit) or a
    sequence of binary digits (the orbit of ``0.y_1 y_2 ...``; at least ``n``
    digits, the window uses up to 53 of them).
    """
    if isinstance(y, Fraction):
        out, v = [], y % 1
        for _ in range(n):
            out.append(float(v))
            v = (2 * v) % 1
        return np.array(out)
    if isinstance(y, (float, int, np.floating)):
        out, v = [], float(y) % 1.0
        for _ in range(n):
            out.append(v)
            v = (2.0 * v) % 1.0
        return np.array(out)
    bits = np.asarray(y, dtype=np.int64)
    if bits.shape[-1] < n:
        raise SymbolicError("digit sequence shorter than n")
    width = 53
    weights = np.ldexp(1.0, -np.arange(1, width + 1))
    padded = np.concatenate([bits, np.zeros(bits.shape[:-1] + (width,), dtype=np.int64)], axis=-1)
    win = np.lib.stride_tricks.sliding_window_view(padded, width, axis=-1)[..., :n, :]
    return win @ weights


def weak_ergodic_profile(phi, y, n_max: int, delta: float = 0.25) -> WeakErgodicProfile:
    """Birkhoff averages of ``phi`` along the doubling orbit of ``y``.

    ``averages[n-1]`` is ``phi_n(y)``; flags mark ``|phi_n - I| > delta``.
    """
    orbit = doubling_orbit(y, n_max)
    vals = np.asarray(phi(orbit), dtype=float)
    avgs = np.cumsum(vals, axis=-1) / np.arange(1, n_max + 1)
    integral = integrate.quad(lambda t: float(phi(np.array(t))), 0.0, 1.0, limit=200)[0]
    return WeakErgodicProfile(avgs, float(integral), float(delta))
