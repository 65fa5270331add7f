"""Compatibility partitions of good cubes and explicit difference sequences.

For a translate map psi: I -> I + m_j ell(I) the good cubes split into
2 (M+1) collections indexed by the level residue a(I) = -level mod (M+1)
and the alternating orbit parity b(I); within one collection any two cubes
are m-compatible (their cube/translate pairs are disjoint or nested inside
a dyadic subcube), which makes the two-element difference systems attached
to the cubes a genuine martingale difference sequence when ordered by
decreasing sidelength.

Two flavors are shipped: the symmetric pair

    d_0 = (h^eta_I + h^theta_{psi I}) / 2,   d_1 = (h^eta_I - h^theta_{psi I}) / 2

reconstructing h^eta_I = d_0 + d_1 and h^theta_{psi I} = d_0 - d_1, and the
averaging-difference pair

    d_0 = (h^0_{psi I} + (h^theta_I)^+) / 3 - (h^theta_I)^-
    d_1 = (-h^0_{psi I} + 2 (h^theta_I)^+) / 3

reconstructing h^theta_I = d_0 + d_1 and h^0_{psi I} - h^0_I = d_0 - 2 d_1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParameterError, RangeError
from .haar import GridFunction, HaarIndex, haar_function
from .lattice import (BadnessParams, Box, DyadicCube, DyadicSystem,
                      ShiftParameter, is_bad)
from .rng import rng_for


@dataclass(frozen=True)
class ShiftMap:
    """Per-level integer translates; constant or level-dependent."""

    constant_m: tuple[int, ...] | None = None
    per_level: dict | None = None

    def __post_init__(self):
        if (self.constant_m is None) == (self.per_level is None):
            raise ParameterError("give exactly one of constant_m or per_level")

    @classmethod
    def constant(cls, m) -> "ShiftMap":
        m = tuple(int(v) for v in (m if np.iterable(m) else (m,)))
        return cls(constant_m=m)

    @classmethod
    def by_level(cls, moves: dict) -> "ShiftMap":
        moves = {int(j): tuple(int(v) for v in m) for j, m in moves.items()}
        return cls(per_level=moves)

    def translate(self, level: int) -> tuple[int, ...]:
        if self.constant_m is not None:
            return self.constant_m
        try:
            return self.per_level[level]
        except KeyError:
            raise RangeError(f"shift map undefined at level {level}") from None

    def sup_norm_sq(self) -> int:
        """max_j |m_j|^2 (exact integer)."""
        if self.constant_m is not None:
            return sum(v * v for v in self.constant_m)
        return max(sum(v * v for v in m) for m in self.per_level.values())

    def apply(self, cube: DyadicCube, system: DyadicSystem) -> DyadicCube:
        m = self.translate(cube.level)
        s = system.size(cube.level)
        return DyadicCube(cube.level,
                          tuple(c + s * v for c, v in zip(cube.corner, m)))


def shift_complexity(psi: ShiftMap, params: BadnessParams) -> int:
    """M = max(r, ceil((1 - gamma)^{-1} log2+ sup|m_j|)), decided exactly.

    The ceiling is the smallest M with |m|^(2b) <= 2^(2 M (b - a)), compared
    in integer arithmetic so powers of two never misround.
    """
    m2 = psi.sup_norm_sq()
    a, b = params.gamma.numerator, params.gamma.denominator
    m_log = 0
    while m2 ** b > 1 << (2 * m_log * (b - a)):
        m_log += 1
        if m_log > 4096:
            raise RangeError("shift complexity out of range")
    return max(params.r, m_log)


def level_class(cube: DyadicCube, big_m: int) -> int:
    """a(I): the canonical residue of -level modulo M + 1."""
    return (-cube.level) % (big_m + 1)


def orbit_parity(system: DyadicSystem, level: int, psi: ShiftMap,
                 box: Box | None = None) -> dict[tuple, int]:
    """Alternating 0/1 coloring along psi orbits of the level's window cubes.

    Orbits on a box window are finite paths (corners move strictly along m),
    so the coloring exists; the parity equals the number of in-window
    predecessors mod 2. Periodic windows would admit odd cycles and are not
    supported.
    """
    box = box or system.window
    m = psi.translate(level)
    s = system.size(level)
    al = system.aligned_box(level, box)
    shape = tuple(e // s for e in al.extent)
    out = {}
    for idx in itertools.product(*[range(k) for k in shape]):
        steps = []
        for i, mi in enumerate(m):
            if mi > 0:
                steps.append(idx[i] // mi)
            elif mi < 0:
                steps.append((shape[i] - 1 - idx[i]) // (-mi))
        count = min(steps) if steps else 0
        corner = tuple(int(al.lo[i] + idx[i] * s) for i in range(len(shape)))
        out[corner] = count % 2
    return out


def compatibility_check(cube_i: DyadicCube, cube_j: DyadicCube,
                        psi: ShiftMap, system: DyadicSystem) -> bool:
    """The m-compatibility disjunction, decided in exact integers.

    Either the unions I u psi(I) and J u psi(J) are disjoint, or the pair of
    smaller sidelength fits inside one child of the bigger cube or of its
    translate.
    """
    if cube_i == cube_j:
        return True
    if cube_i.level < cube_j.level:
        cube_i, cube_j = cube_j, cube_i
    # now ell(I) <= ell(J)
    boxes_i = [system.cube_box(cube_i), system.cube_box(psi.apply(cube_i, system))]
    boxes_j = [system.cube_box(cube_j), system.cube_box(psi.apply(cube_j, system))]
    if not any(bi.intersects(bj) for bi in boxes_i for bj in boxes_j):
        return True
    if cube_i.level == cube_j.level:
        return False
    for big in (cube_j, psi.apply(cube_j, system)):
        child_level = big.level + 1
        if child_level > system.j_max:
            continue
        child = system.containing_cube(child_level, cube_i.corner)
        cb = system.cube_box(child)
        if system.cube_box(big).contains_box(cb) \
                and all(cb.contains_box(b) for b in boxes_i):
            return True
    return False


@dataclass(eq=False)
class CompatibilityClass:
    k: int
    v: int
    cubes: list[DyadicCube] = field(default_factory=list)

    def check_all_pairs(self, psi: ShiftMap, system: DyadicSystem) -> bool:
        for a in range(len(self.cubes)):
            for b in range(a + 1, len(self.cubes)):
                if not compatibility_check(self.cubes[a], self.cubes[b],
                                           psi, system):
                    return False
        return True


def collect_good_cubes(system: DyadicSystem, params: BadnessParams,
                       levels, box: Box | None = None,
                       k_max: int | None = None) -> list[DyadicCube]:
    out = []
    for j in levels:
        for cube in system.cubes_at_level(j, box):
            if not is_bad(cube, params, system, k_max):
                out.append(cube)
    return out


def partition(good_cubes, psi: ShiftMap, params: BadnessParams,
              system: DyadicSystem,
              box: Box | None = None) -> list[CompatibilityClass]:
    """Split good cubes into the 2 (M+1) collections indexed by (a, b)."""
    big_m = shift_complexity(psi, params)
    classes = {(k, v): CompatibilityClass(k, v)
               for k in range(big_m + 1) for v in (0, 1)}
    parities: dict[int, dict] = {}
    for cube in good_cubes:
        j = cube.level
        if j not in parities:
            parities[j] = orbit_parity(system, j, psi, box)
        k = level_class(cube, big_m)
        v = parities[j][cube.corner]
        classes[(k, v)].cubes.append(cube)
    return [classes[(k, v)] for k in range(big_m + 1) for v in (0, 1)]


# ---------------------------------------------------------------------------
# difference sequences


@dataclass(eq=False)
class DifferenceSequence:
    """Ordered martingale differences with their generation metadata."""

    terms: list[GridFunction]
    cubes: list[DyadicCube]
    u_values: list[int]
    flavor: str
    multipliers: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def matrix(self) -> np.ndarray:
        """Stack of term values, shape (len, cells..., d) flattened per term."""
        return np.stack([t.values for t in self.terms])


def _ordered(cubes) -> list[DyadicCube]:
    return sorted(cubes, key=lambda c: (c.level, c.corner))


def build_differences(cubes, eta, theta, psi: ShiftMap, flavor: str,
                      system: DyadicSystem, box: Box,
                      vector=None) -> DifferenceSequence:
    """Difference pair per cube, ordered by decreasing sidelength.

    Ties break lexicographically by corner, then u = 0, 1. ``flavor`` is
    "A" (both profiles oscillating) or "B" (averaging profile on the
    translate; requires a nonzero translate).
    """
    eta = tuple(eta)
    theta = tuple(theta)
    if flavor not in ("A", "B"):
        raise ParameterError("flavor must be 'A' or 'B'")
    if flavor == "A" and (not any(eta) or not any(theta)):
        raise ParameterError("A-type needs cancellative eta and theta")
    if flavor == "B" and not any(theta):
        raise ParameterError("B-type needs a cancellative theta")
    terms: list[GridFunction] = []
    meta_cubes: list[DyadicCube] = []
    u_values: list[int] = []
    for cube in _ordered(cubes):
        trans = psi.apply(cube, system)
        if flavor == "A":
            h_i = haar_function(HaarIndex(cube, eta), system, box, vector=vector)
            h_t = haar_function(HaarIndex(trans, theta), system, box, vector=vector)
            d0 = 0.5 * (h_i + h_t)
            d1 = 0.5 * (h_i - h_t)
        else:
            if trans == cube:
                raise ParameterError("B-type needs psi(I) != I")
            h_th = haar_function(HaarIndex(cube, theta), system, box, vector=vector)
            plus = GridFunction(h_th.box, h_th.level, np.maximum(h_th.values, 0.0))
            minus = GridFunction(h_th.box, h_th.level, np.maximum(-h_th.values, 0.0))
            h0_t = haar_function(HaarIndex(trans, (0,) * len(theta)), system,
                                 box, vector=vector)
            d0 = (1.0 / 3.0) * (h0_t + plus) - minus
            d1 = (1.0 / 3.0) * ((-1.0) * h0_t + 2.0 * plus)
        for u, d in ((0, d0), (1, d1)):
            terms.append(d)
            meta_cubes.append(cube)
            u_values.append(u)
    return DifferenceSequence(terms, meta_cubes, u_values, flavor)


@dataclass(frozen=True)
class MdsReport:
    ok: bool
    max_atom_mean: float
    first_failure: int | None


def verify_mds(seq: DifferenceSequence, tol: float = 1e-12) -> MdsReport:
    """Check zero mean of every term on every atom generated so far.

    Atoms of the sigma-algebra generated by the previous terms are the
    maximal cell sets on which all of them are constant (value classes of
    the joint value vector, possibly disconnected).
    """
    if not seq.terms:
        return MdsReport(True, 0.0, None)
    cells = seq.terms[0].values.reshape(-1, seq.terms[0].d)
    labels = np.zeros(cells.shape[0], dtype=np.int64)
    worst = 0.0
    for i, term in enumerate(seq.terms):
        vals = term.values.reshape(-1, term.d)
        for atom in np.unique(labels):
            mask = labels == atom
            mean = np.abs(vals[mask].mean(axis=0)).max()
            worst = max(worst, float(mean))
            if mean > tol:
                return MdsReport(False, worst, i)
        key = np.concatenate([labels[:, None].astype(np.float64), vals], axis=1)
        _, labels = np.unique(key, axis=0, return_inverse=True)
    return MdsReport(True, worst, None)


def apply_transform(seq: DifferenceSequence, multipliers,
                    bound: float | None = None) -> GridFunction:
    """sum_i lambda_i d_i with an optional multiplier bound check."""
    multipliers = np.asarray(multipliers, dtype=np.float64)
    if multipliers.shape != (len(seq),):
        raise ParameterError("one multiplier per sequence term required")
    if bound is not None and np.abs(multipliers).max() > bound + 1e-15:
        raise ParameterError("multiplier exceeds the declared bound")
    out = seq.terms[0] * float(multipliers[0])
    for lam, term in zip(multipliers[1:], seq.terms[1:]):
        if lam != 0.0:
            out = out + term * float(lam)
    return out


@dataclass(frozen=True)
class NormEstimate:
    p: float
    value: float
    trials: int
    standard_error: float
    skipped: int = 0

    def __post_init__(self):
        if self.value < 0:
            raise ParameterError("norm estimates are nonnegative")


def canonical_sequence(m: int = 3, flavor: str = "A", eta=(1,), theta=(1,),
                       coarse_cubes: int = 8, levels: int = 6, r: int = 4,
                       gamma: Fraction = Fraction(1, 2),
                       k_max: int = 4) -> tuple[DifferenceSequence, DyadicSystem]:
    """A reference difference sequence: largest class of a window partition."""
    params = BadnessParams(r, Fraction(gamma))
    size0 = 1 << levels
    width = coarse_cubes * size0
    margin = (abs(m) + 1) * size0
    window = Box((-margin,), (width + margin,))
    system = DyadicSystem(ShiftParameter.zero(-k_max, levels, 1), window)
    inner = Box((0,), (width,))
    good = collect_good_cubes(system, params, range(0, levels), inner, k_max)
    psi = ShiftMap.constant((m,))
    classes = partition(good, psi, params, system, inner)
    best = max(classes, key=lambda c: len(c.cubes))
    seq = build_differences(best.cubes, eta, theta, psi, flavor, system, window)
    return seq, system


def estimate_transform_ratio(p: float, d: int = 1, trials: int = 1000,
                             seed: int = 0, m: int = 3, flavor: str = "A",
                             multiplier_bound: float = 1.0,
                             unimodular: bool = False,
                             seq: DifferenceSequence | None = None) -> NormEstimate:
    """Empirical max of ||sum lambda_i c_i d_i||_p / ||sum c_i d_i||_p.

    Each trial draws standard normal coefficients c_i (in R^d) and
    multipliers uniform in [-bound, bound] (or random signs when
    ``unimodular``). Degenerate denominators are skipped and counted.
    """
    if not (1.0 < p < float("inf")):
        raise ParameterError("p must lie in (1, oo)")
    if seq is None:
        seq, _ = canonical_sequence(m=m, flavor=flavor)
    rng = rng_for(seed, 23)
    mat = seq.matrix()[..., 0]          # (len, cells...), scalar profiles
    flat = mat.reshape(len(seq), -1)
    vol = seq.terms[0].cell_volume
    ratios = []
    skipped = 0
    for _ in range(trials):
        coef = rng.standard_normal((len(seq), d))
        if unimodular:
            lam = rng.integers(0, 2, size=len(seq)) * 2.0 - 1.0
        else:
            lam = rng.uniform(-multiplier_bound, multiplier_bound, size=len(seq))
        base = coef.T @ flat            # (d, cells)
        trans = (coef * lam[:, None]).T @ flat
        nb = (np.sum(np.sqrt((base ** 2).sum(axis=0)) ** p) * vol) ** (1 / p)
        nt = (np.sum(np.sqrt((trans ** 2).sum(axis=0)) ** p) * vol) ** (1 / p)
        if nb < 1e-14:
            skipped += 1
            continue
        ratios.append(nt / nb)
    ratios = np.asarray(ratios)
    if ratios.size == 0:
        raise ParameterError("all trials degenerate")
    se = float(ratios.std(ddof=1) / math.sqrt(ratios.size)) if ratios.size > 1 else 0.0
    return NormEstimate(p, float(ratios.max()), trials, se, skipped)


__all__ = [
    "ShiftMap", "shift_complexity", "level_class", "orbit_parity",
    "compatibility_check", "CompatibilityClass", "collect_good_cubes",
    "partition", "DifferenceSequence", "build_differences", "MdsReport",
    "verify_mds", "apply_transform", "NormEstimate", "canonical_sequence",
    "estimate_transform_ratio",
]
