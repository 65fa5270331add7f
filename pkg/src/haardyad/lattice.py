"""Random shifted dyadic systems with exact integer geometry.

All geometry lives in integer units of the finest cell size 2^(-j_max).
A system covers levels j_min..j_max; the shift parameter carries one bit
vector per level in (j_min, j_max], and the level-j grid is the standard
grid translated by sum_{i>j} 2^(j_max-i) * bits_i (in finest units).

A cube is *bad* (parameters r, gamma = a/b) when it comes within
ell(I)^gamma * ell(J)^(1-gamma) of the boundary of some ancestor J at
least r generations up. The inequality is decided exactly: both sides are
raised to the b-th power in big-integer arithmetic, so no cube is ever
misclassified by a float rounding at the threshold.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .errors import ParameterError, RangeError, ResourceError
from .rng import shift_bits


# ---------------------------------------------------------------------------
# basic geometry


@dataclass(frozen=True)
class Box:
    """Half-open integer box [lo, hi) in finest-grid units."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ParameterError("box corners must have equal dimension")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ParameterError(f"empty box {self.lo}..{self.hi}")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> tuple[int, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def cells(self) -> int:
        return math.prod(self.extent)

    def contains_point(self, p) -> bool:
        return all(l <= x < h for l, x, h in zip(self.lo, p, self.hi))

    def contains_box(self, other: "Box") -> bool:
        return all(l <= ol and oh <= h
                   for l, h, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: "Box") -> bool:
        return all(ol < h and l < oh
                   for l, h, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))


@dataclass(frozen=True, eq=False)
class ShiftParameter:
    """Per-level binary shift vectors for levels in (j_min, j_max].

    ``bits`` has shape (j_max - j_min, n); row i belongs to level
    j_min + 1 + i and entries are 0 or 1.
    """

    j_min: int
    j_max: int
    bits: np.ndarray

    def __post_init__(self):
        if self.j_max <= self.j_min:
            raise ParameterError("need j_max > j_min")
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] != self.j_max - self.j_min:
            raise ParameterError(
                f"bits shape {bits.shape} does not match levels "
                f"({self.j_min}, {self.j_max}]")
        if bits.size and bits.max() > 1:
            raise ParameterError("shift bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def zero(cls, j_min: int, j_max: int, n: int) -> "ShiftParameter":
        return cls(j_min, j_max, np.zeros((j_max - j_min, n), dtype=np.uint8))

    def offset(self, j: int) -> np.ndarray:
        """Grid offset of level j in finest units: sum_{i>j} 2^(j_max-i) bits_i."""
        if j < self.j_min or j > self.j_max:
            raise RangeError(f"level {j} outside [{self.j_min}, {self.j_max}]")
        rows = self.bits[j - self.j_min:]
        if rows.shape[0] == 0:
            return np.zeros(self.n, dtype=np.int64)
        weights = 1 << np.arange(rows.shape[0] - 1, -1, -1, dtype=np.int64)
        return (rows.astype(np.int64) * weights[:, None]).sum(axis=0)


@dataclass(frozen=True)
class DyadicCube:
    """Level-j cube with integer corner in finest-grid units."""

    level: int
    corner: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.corner)


@dataclass(frozen=True, eq=False)
class DyadicSystem:
    """A shifted dyadic grid restricted to levels [j_min, j_max] over a window."""

    shift: ShiftParameter
    window: Box

    def __post_init__(self):
        if self.window.n != self.shift.n:
            raise ParameterError("window dimension does not match shift")

    @property
    def n(self) -> int:
        return self.shift.n

    @property
    def j_min(self) -> int:
        return self.shift.j_min

    @property
    def j_max(self) -> int:
        return self.shift.j_max

    def size(self, level: int) -> int:
        """Sidelength of level cubes in finest units."""
        if level < self.j_min or level > self.j_max:
            raise RangeError(f"level {level} outside [{self.j_min}, {self.j_max}]")
        return 1 << (self.j_max - level)

    def offset(self, level: int) -> np.ndarray:
        return self.shift.offset(level)

    def cube_box(self, cube: DyadicCube) -> Box:
        s = self.size(cube.level)
        return Box(cube.corner, tuple(c + s for c in cube.corner))

    def containing_cube(self, level: int, point) -> DyadicCube:
        """The level cube of this system containing the given point."""
        s = self.size(level)
        off = self.offset(level)
        corner = tuple(int(off[i] + ((point[i] - off[i]) // s) * s)
                       for i in range(self.n))
        return DyadicCube(level, corner)

    def aligned_box(self, level: int, box: Box | None = None) -> Box:
        """Smallest level-aligned box of this system containing ``box``."""
        box = box or self.window
        s = self.size(level)
        off = self.offset(level)
        lo = tuple(int(off[i] + ((box.lo[i] - off[i]) // s) * s)
                   for i in range(self.n))
        hi = tuple(int(off[i] + (-((off[i] - box.hi[i]) // s)) * s)
                   for i in range(self.n))
        return Box(lo, hi)

    def cubes_at_level(self, level: int, box: Box | None = None):
        """Corners of all level cubes meeting ``box`` (default: the window)."""
        box = box or self.window
        s = self.size(level)
        al = self.aligned_box(level, box)
        ranges = [range(al.lo[i], al.hi[i], s) for i in range(self.n)]
        for corner in itertools.product(*ranges):
            yield DyadicCube(level, corner)


def sample_beta(seed: int, j_min: int, j_max: int, n: int,
                stream: int = 0) -> ShiftParameter:
    """Draw independent uniform shift bits for levels (j_min, j_max]."""
    if j_max <= j_min:
        raise ParameterError("need a nonempty level range")
    if n < 1:
        raise ParameterError("dimension must be positive")
    levels = j_max - j_min
    bits = shift_bits(seed, stream, levels * n)[0].reshape(levels, n)
    return ShiftParameter(j_min, j_max, bits)


def shift_cube(cube: DyadicCube, beta: ShiftParameter) -> DyadicCube:
    """Translate a standard-grid cube by the truncated binary shift sum."""
    if cube.level < beta.j_min:
        raise ParameterError(
            f"shift bits do not cover levels ({cube.level}, {beta.j_max}]")
    off = beta.offset(cube.level)
    return DyadicCube(cube.level, tuple(int(c + o) for c, o in zip(cube.corner, off)))


def ancestor(cube: DyadicCube, k: int, system: DyadicSystem) -> DyadicCube:
    """The k-th dyadic ancestor of ``cube`` within ``system``."""
    if k < 0:
        raise ParameterError("ancestor depth must be nonnegative")
    if cube.level - k < system.j_min:
        raise RangeError(
            f"ancestor level {cube.level - k} below system floor {system.j_min}")
    if k == 0:
        return cube
    return system.containing_cube(cube.level - k, cube.corner)


def dist_to_complement(inner: DyadicCube, outer: DyadicCube,
                       system: DyadicSystem) -> int:
    """Distance (finest units) from ``inner`` to the complement of ``outer``.

    For nested boxes this is the smallest per-axis gap to the outer
    boundary, computed in exact integer arithmetic.
    """
    si = system.size(inner.level)
    so = system.size(outer.level)
    gaps = []
    for i in range(inner.n):
        lo_gap = inner.corner[i] - outer.corner[i]
        hi_gap = (outer.corner[i] + so) - (inner.corner[i] + si)
        if lo_gap < 0 or hi_gap < 0:
            raise ParameterError("inner cube is not contained in outer cube")
        gaps.append(min(lo_gap, hi_gap))
    return min(gaps)


# ---------------------------------------------------------------------------
# good/bad classification


@dataclass(frozen=True)
class BadnessParams:
    """Badness parameters r >= 1 and rational gamma = a/b in (0, 1)."""

    r: int
    gamma: Fraction

    def __post_init__(self):
        if self.r < 1:
            raise ParameterError("r must be a positive integer")
        g = Fraction(self.gamma)
        if not (0 < g < 1):
            raise ParameterError("gamma must lie in (0, 1)")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def parse(cls, r: int, gamma: str | Fraction) -> "BadnessParams":
        return cls(int(r), Fraction(gamma))


def is_bad(cube: DyadicCube, params: BadnessParams, system: DyadicSystem,
           k_max: int | None = None) -> bool:
    """Exact badness test against ancestors k in [r, depth].

    ``depth`` is the available ancestor depth (capped by ``k_max`` when
    given). The threshold inequality dist <= ell(I)^gamma ell(J)^(1-gamma)
    is decided by raising both sides to the power b = denominator(gamma)
    in big-integer arithmetic.
    """
    depth = cube.level - system.j_min
    if k_max is not None:
        if k_max < params.r:
            raise ParameterError("k_max must be at least r")
        depth = min(depth, k_max)
    if depth < params.r:
        raise RangeError(
            f"no ancestor with k >= r={params.r} within the level range "
            f"(available depth {cube.level - system.j_min})")
    a = params.gamma.numerator
    b = params.gamma.denominator
    side = 1 << (system.j_max - cube.level)
    for k in range(params.r, depth + 1):
        parent = ancestor(cube, k, system)
        dist = dist_to_complement(cube, parent, system)
        # dist^b <= ell(I)^a * ell(J)^(b-a), all in finest units
        if dist ** b <= (side ** b) << (k * (b - a)):
            return True
    return False


def pi_bad_bound(n: int, params: BadnessParams) -> float:
    """Closed-form union bound 4n 2^(-r gamma) / (1 - 2^(-gamma))."""
    g = float(params.gamma)
    return 4.0 * n * 2.0 ** (-params.r * g) / (1.0 - 2.0 ** (-g))


def default_r(n: int, gamma: Fraction | str) -> int:
    """Smallest r making pi_bad_bound drop below 1/2."""
    gamma = Fraction(gamma)
    r = 1
    while pi_bad_bound(n, BadnessParams(r, gamma)) >= 0.5:
        r += 1
        if r > 4096:
            raise RangeError("no reasonable r brings the badness bound below 1/2")
    return r


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Monte Carlo frequency with its binomial standard error."""

    mean: float
    trials: int

    def __post_init__(self):
        if not (0.0 <= self.mean <= 1.0):
            raise ParameterError("mean must lie in [0, 1]")
        if self.trials < 1:
            raise ParameterError("need at least one trial")

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.mean * (1.0 - self.mean) / self.trials)

    @property
    def complement(self) -> "ProbabilityEstimate":
        return ProbabilityEstimate(1.0 - self.mean, self.trials)


@dataclass(frozen=True)
class PiBadResult:
    """estimate_pi_bad output: frequency, union bound, truncation tail."""

    estimate: ProbabilityEstimate
    bound: float
    tail_bound: float
    n: int
    params: BadnessParams
    depth: int
    seed: int

    @property
    def passes_bound(self) -> bool:
        e = self.estimate
        return e.mean <= self.bound + 3.0 * e.standard_error


# --- hot kernel: badness flags for many sampled shifts -----------------------
#
# The reference cube is the finest cell at the origin, so ell(I) = 1 unit and
# the k-th threshold is the exact integer b-th root of 2^(k(b-a)); dist^b <=
# 2^(k(b-a)) iff dist <= T_k for integer dist. T_k is precomputed with Python
# big integers and fits in int64 for every usable depth.


def _int_root(x: int, b: int) -> int:
    """floor(x ** (1/b)) for nonnegative big integers, exact."""
    if x < 0 or b < 1:
        raise ParameterError("invalid integer root")
    if x == 0:
        return 0
    if b == 1:
        return x
    if b == 2:
        return math.isqrt(x)
    guess = int(round(x ** (1.0 / b)))
    while guess ** b > x:
        guess -= 1
    while (guess + 1) ** b <= x:
        guess += 1
    return guess


def badness_thresholds(params: BadnessParams, depth: int) -> np.ndarray:
    """int64 thresholds T_k, index k = 0..depth (entries below r unused)."""
    a = params.gamma.numerator
    b = params.gamma.denominator
    t = np.zeros(depth + 1, dtype=np.int64)
    for k in range(depth + 1):
        t[k] = _int_root(1 << (k * (b - a)), b)
    return t


def _badness_flags_numpy(bits: np.ndarray, r: int,
                         thresholds: np.ndarray) -> np.ndarray:
    """Vectorized badness flags; bits has shape (trials, depth, n).

    bits[t, i, :] is the shift bit of the level i steps above the reference
    cell, so the offset inside the k-th ancestor is sum_{i<k} 2^i bits_i.
    """
    trials, depth, n = bits.shape
    weights = (np.int64(1) << np.arange(depth, dtype=np.int64))
    off = np.cumsum(bits.astype(np.int64) * weights[None, :, None], axis=1)
    sizes = (np.int64(1) << np.arange(1, depth + 1, dtype=np.int64))
    s = sizes[None, :, None]
    rel = (s - off) % s
    dist = np.minimum(rel, s - 1 - rel).min(axis=2)
    bad_k = dist <= thresholds[None, 1:depth + 1]
    return np.any(bad_k[:, r - 1:], axis=1)


@njit(cache=True)
def _badness_flags_jit(bits, r, thresholds):  # pragma: no cover - jit body
    trials, depth, n = bits.shape
    out = np.zeros(trials, dtype=np.bool_)
    for t in range(trials):
        off = np.zeros(n, dtype=np.int64)
        for k in range(1, depth + 1):
            w = np.int64(1) << np.int64(k - 1)
            size = np.int64(1) << np.int64(k)
            dist = np.int64(1) << np.int64(62)
            for i in range(n):
                off[i] += w * bits[t, k - 1, i]
                relpos = (size - off[i]) % size
                gap = min(relpos, size - 1 - relpos)
                if gap < dist:
                    dist = gap
            if k >= r and dist <= thresholds[k]:
                out[t] = True
                break
    return out


def badness_flags(bits: np.ndarray, r: int, thresholds: np.ndarray,
                  use_numba: bool | None = None) -> np.ndarray:
    use = NUMBA_ENABLED if use_numba is None else use_numba
    if use:
        return _badness_flags_jit(np.ascontiguousarray(bits), r, thresholds)
    return _badness_flags_numpy(bits, r, thresholds)


def estimate_pi_bad(n: int, params: BadnessParams, trials: int, seed: int,
                    depth_margin: int = 24,
                    use_numba: bool | None = None) -> PiBadResult:
    """Monte Carlo badness frequency of a reference cube under random shifts.

    The sampled systems carry r + depth_margin levels above the reference
    cube; the probability mass of badness caused by deeper ancestors is
    bounded by ``tail_bound`` in the result.
    """
    if trials < 1:
        raise ParameterError("need at least one trial")
    if depth_margin < 0:
        raise RangeError("depth_margin must be nonnegative")
    depth = params.r + depth_margin
    if depth > 60:
        raise RangeError("ancestor depth above 60 overflows the int64 kernels")
    if depth * n > 2 ** 20:
        raise ResourceError("shift sample too large", required=depth * n)
    thresholds = badness_thresholds(params, depth)
    g = float(params.gamma)
    tail = 4.0 * n * 2.0 ** (-(params.r + depth_margin) * g) / (1.0 - 2.0 ** (-g))
    block = max(1, min(trials, 1 << 14))
    bad = 0
    start = 0
    while start < trials:
        stop = min(trials, start + block)
        bits = shift_bits(seed, np.arange(start, stop), depth * n)
        bits = bits.reshape(stop - start, depth, n)
        bad += int(badness_flags(bits, params.r, thresholds, use_numba).sum())
        start = stop
    est = ProbabilityEstimate(bad / trials, trials)
    return PiBadResult(est, pi_bad_bound(n, params), tail, n, params, depth, seed)


# ---------------------------------------------------------------------------
# exact enumeration over shift states


def count_shift_states(j_min: int, j_max: int, n: int) -> int:
    return 1 << ((j_max - j_min) * n)


def iter_shift_states(j_min: int, j_max: int, n: int,
                      max_states: int = 1 << 20):
    """All shift parameters for levels (j_min, j_max], exactly once each."""
    total = count_shift_states(j_min, j_max, n)
    if total > max_states:
        raise ResourceError(
            f"enumeration needs {total} shift states (limit {max_states})",
            required=total)
    levels = j_max - j_min
    for state in range(total):
        bits = np.array(
            [(state >> i) & 1 for i in range(levels * n)],
            dtype=np.uint8).reshape(levels, n)
        yield ShiftParameter(j_min, j_max, bits)


def badness_position_independence(params: BadnessParams, n: int = 1,
                                  coarse_levels: int = 4, fine_levels: int = 2,
                                  max_states: int = 1 << 20) -> dict:
    """Exact joint distribution of (badness, position) under full enumeration.

    The reference cube sits at level 0 of a system with ``coarse_levels``
    shift levels above it (driving badness) and ``fine_levels`` below it
    (driving the position offset). Returns the joint counts and the maximum
    deviation |P(bad, pos) - P(bad) P(pos)| over all pairs.
    """
    if coarse_levels < params.r:
        raise RangeError("coarse_levels must be at least r")
    j_min, j_max = -coarse_levels, fine_levels
    window = Box((-(1 << (coarse_levels + fine_levels)),) * n,
                 ((1 << (coarse_levels + fine_levels)),) * n)
    base = DyadicCube(0, (0,) * n)
    positions: dict[tuple, int] = {}
    joint: dict[tuple, int] = {}
    bad_counts = [0, 0]
    total = 0
    for beta in iter_shift_states(j_min, j_max, n, max_states):
        system = DyadicSystem(beta, window)
        shifted = shift_cube(base, beta)
        bad = is_bad(shifted, params, system)
        pos = shifted.corner
        positions[pos] = positions.get(pos, 0) + 1
        joint[(bad, pos)] = joint.get((bad, pos), 0) + 1
        bad_counts[int(bad)] += 1
        total += 1
    max_dev = 0.0
    for bad in (False, True):
        for pos, pcount in positions.items():
            jcount = joint.get((bad, pos), 0)
            dev = abs(jcount * total - bad_counts[int(bad)] * pcount)
            max_dev = max(max_dev, dev / total ** 2)
    return {
        "states": total,
        "pi_bad": bad_counts[1] / total,
        "max_deviation": max_dev,
        "joint": joint,
    }


def sample_system(seed: int, j_min: int, j_max: int, n: int, window: Box,
                  stream: int = 0) -> DyadicSystem:
    return DyadicSystem(sample_beta(seed, j_min, j_max, n, stream), window)


def bit_frequencies(seed_count: int, levels: int, n: int = 1,
                    base_seed: int = 0) -> np.ndarray:
    """Empirical per-level frequency of bit 1 across many seeds."""
    bits = shift_bits(base_seed, np.arange(seed_count), levels * n)
    return bits.reshape(seed_count, levels, n).mean(axis=0)


__all__ = [
    "Box", "ShiftParameter", "DyadicCube", "DyadicSystem", "BadnessParams",
    "ProbabilityEstimate", "PiBadResult", "sample_beta", "shift_cube",
    "ancestor", "dist_to_complement", "is_bad", "pi_bad_bound", "default_r",
    "estimate_pi_bad", "badness_thresholds", "badness_flags",
    "iter_shift_states", "count_shift_states",
    "badness_position_independence", "sample_system", "bit_frequencies",
]
