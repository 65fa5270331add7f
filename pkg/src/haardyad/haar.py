"""Grid functions and the n-dimensional Haar system.

Functions are piecewise constant on the finest cells of a dyadic system,
with values in R^d. The Haar profile on a cube is the tensor product of
one-dimensional averaging (theta_i = 0) and oscillating (theta_i = 1)
profiles, L2-normalized in continuous units, with the oscillating profile
positive on the lower half of each axis.

The fast transform is a bottom-up pyramid over cube integrals; geometry
stays in exact integers and only the (generally irrational) normalizations
|I|^(-1/2) are floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError
from .lattice import Box, DyadicCube, DyadicSystem
from .rng import rng_for


@dataclass(eq=False)
class GridFunction:
    """Piecewise-constant function on finest cells of level ``level``.

    ``values`` has shape ``extent + (d,)`` over the integer box ``box``.
    """

    box: Box
    level: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape[:-1] != self.box.extent:
            raise ParameterError(
                f"values shape {vals.shape} does not match box extent "
                f"{self.box.extent} + (d,)")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("grid function values must be finite")
        self.values = vals

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.level * self.n)

    def copy(self) -> "GridFunction":
        return GridFunction(self.box, self.level, self.values.copy())

    def _check_same_window(self, other: "GridFunction"):
        if self.box != other.box or self.level != other.level:
            raise ParameterError("grid functions live on different windows")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_window(other)
        return GridFunction(self.box, self.level, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_window(other)
        return GridFunction(self.box, self.level, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.box, self.level, self.values * float(scalar))

    __rmul__ = __mul__


def zeros(box: Box, level: int, d: int = 1) -> GridFunction:
    return GridFunction(box, level, np.zeros(box.extent + (d,)))


def random_grid_function(box: Box, level: int, d: int = 1, seed: int = 0,
                         stream: int = 0) -> GridFunction:
    rng = rng_for(seed, stream)
    return GridFunction(box, level, rng.standard_normal(box.extent + (d,)))


def pad_to(f: GridFunction, box: Box) -> GridFunction:
    """Extend by zero onto a larger box."""
    if not box.contains_box(f.box):
        raise ParameterError("target box does not contain the function support")
    out = np.zeros(box.extent + (f.d,))
    sl = tuple(slice(fl - bl, fh - bl)
               for fl, fh, bl in zip(f.box.lo, f.box.hi, box.lo))
    out[sl] = f.values
    return GridFunction(box, f.level, out)


def restrict_to(f: GridFunction, box: Box) -> GridFunction:
    if not f.box.contains_box(box):
        raise ParameterError("restriction box is not inside the support box")
    sl = tuple(slice(bl - fl, bh - fl)
               for bl, bh, fl in zip(box.lo, box.hi, f.box.lo))
    return GridFunction(box, f.level, f.values[sl].copy())


def inner_product(f: GridFunction, g: GridFunction):
    """Exact cell sum times cell volume.

    Matching value dimensions contract to a scalar; a scalar ``g`` against a
    vector ``f`` returns the componentwise pairing in R^d.
    """
    f._check_same_window(g)
    if f.d == g.d:
        return float(np.sum(f.values * g.values) * f.cell_volume)
    if g.d == 1:
        axes = tuple(range(f.n))
        return np.sum(f.values * g.values, axis=axes) * f.cell_volume
    raise ParameterError("incompatible value dimensions")


def lp_norm(f: GridFunction, p: float) -> float:
    """L^p norm with the pointwise euclidean norm on R^d values."""
    if p <= 0:
        raise ParameterError("p must be positive")
    mag = np.sqrt(np.sum(f.values ** 2, axis=-1))
    return float((np.sum(mag ** p) * f.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Haar indices and pointwise values


@dataclass(frozen=True)
class HaarIndex:
    cube: DyadicCube
    theta: tuple[int, ...]

    def __post_init__(self):
        if len(self.theta) != self.cube.n:
            raise ParameterError("theta dimension does not match the cube")
        if any(t not in (0, 1) for t in self.theta):
            raise ParameterError("theta entries must be 0 or 1")

    @property
    def cancellative(self) -> bool:
        return any(self.theta)


def thetas(n: int, include_zero: bool = False) -> list[tuple[int, ...]]:
    """Tensor sign patterns in a fixed order (binary, axis 0 most significant)."""
    out = [tuple((t >> (n - 1 - i)) & 1 for i in range(n))
           for t in range(2 ** n)]
    return out if include_zero else out[1:]


def theta_index(theta: tuple[int, ...]) -> int:
    """Position of a nonzero theta in ``thetas(n)``."""
    n = len(theta)
    t = sum(theta[i] << (n - 1 - i) for i in range(n))
    if t == 0:
        raise ParameterError("zero theta has no cancellative slot")
    return t - 1


def haar_value(index: HaarIndex, point, system: DyadicSystem) -> float:
    """Value of h^theta_I on the finest cell containing ``point`` (units)."""
    cube = index.cube
    size = system.size(cube.level)
    if any(t == 1 for t in index.theta) and size < 2:
        raise ParameterError("cancellative profile needs at least 2 cells per axis")
    rel = [p - c for p, c in zip(point, cube.corner)]
    if any(r < 0 or r >= size for r in rel):
        return 0.0
    sign = 1.0
    for i, t in enumerate(index.theta):
        if t == 1 and rel[i] >= size // 2:
            sign = -sign
    return sign * 2.0 ** (cube.level * cube.n / 2.0)


def haar_function(index: HaarIndex, system: DyadicSystem, box: Box,
                  level: int | None = None, vector=None) -> GridFunction:
    """Materialize h^theta_I as a grid function on ``box``.

    ``vector`` (shape ``(d,)``) tensors a scalar profile into R^d values.
    """
    level = system.j_max if level is None else level
    n = system.n
    vec = np.array([1.0]) if vector is None else np.asarray(vector, float)
    out = np.zeros(box.extent + (vec.size,))
    cube = index.cube
    size = system.size(cube.level)
    cb = Box(cube.corner, tuple(c + size for c in cube.corner))
    if not box.contains_box(cb):
        raise ParameterError("cube does not fit inside the requested box")
    mag = 2.0 ** (cube.level * n / 2.0)
    half = size // 2
    axes_1d = []
    for i in range(n):
        start = cube.corner[i] - box.lo[i]
        prof = np.ones(size)
        if index.theta[i] == 1:
            prof[half:] = -1.0
        axes_1d.append((start, prof))
    block = np.ones(())
    for start, prof in axes_1d:
        block = np.multiply.outer(block, prof)
    sl = tuple(slice(s, s + size) for s, _ in axes_1d)
    out[sl] = mag * np.multiply.outer(block, vec)
    return GridFunction(box, level, out)


# ---------------------------------------------------------------------------
# analysis / synthesis


@dataclass(eq=False)
class HaarCoefficients:
    """Haar detail coefficients per level plus coarse-scale averages.

    ``details[j]`` has shape ``(cubes at level j ...) + (d, 2^n - 1)`` and
    holds <h^theta_I, f> for parent cubes I at level j, theta slot order per
    ``thetas(n)``. ``coarse`` holds <h^0_I, f> at level j_min.
    ``cube_integrals[j]`` are the plain integrals over level-j cubes.
    """

    box: Box
    j_min: int
    j_max: int
    details: dict[int, np.ndarray]
    coarse: np.ndarray
    cube_integrals: dict[int, np.ndarray]

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def d(self) -> int:
        return self.coarse.shape[-1]

    def mass(self) -> float:
        """Squared l2 mass of all coefficients (Parseval partner of ||f||_2^2)."""
        total = float(np.sum(self.coarse ** 2))
        for arr in self.details.values():
            total += float(np.sum(arr ** 2))
        return total


def _embed(f: GridFunction, box: Box) -> np.ndarray:
    out = np.zeros(box.extent + (f.d,))
    sl = tuple(slice(fl - bl, fh - bl)
               for fl, fh, bl in zip(f.box.lo, f.box.hi, box.lo))
    out[sl] = f.values
    return out


def _forward_step(a: np.ndarray, n: int) -> np.ndarray:
    """One pyramid level: child integrals -> (parents..., d, 2^n) combos.

    Combo index in binary, axis-0 bit most significant; bit 0 selects the
    per-axis sum (a + b), bit 1 the signed difference (a - b) with the lower
    half positive.
    """
    out = a
    for ax in range(n):
        m = out.shape[ax]
        shape = out.shape[:ax] + (m // 2, 2) + out.shape[ax + 1:]
        out = out.reshape(shape)
        low = np.take(out, 0, axis=ax + 1)
        high = np.take(out, 1, axis=ax + 1)
        out = np.stack([low + high, low - high], axis=-1)
    d_pos = n
    spatial = out.shape[:n]
    d = out.shape[d_pos]
    return out.reshape(spatial + (d, 2 ** n))


def _inverse_step(combos: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`_forward_step`."""
    spatial = combos.shape[:n]
    d = combos.shape[n]
    out = combos.reshape(spatial + (d,) + (2,) * n)
    for ax in range(n - 1, -1, -1):
        s = np.take(out, 0, axis=n + 1 + ax)
        dif = np.take(out, 1, axis=n + 1 + ax)
        low = (s + dif) / 2.0
        high = (s - dif) / 2.0
        stacked = np.stack([low, high], axis=ax + 1)
        m = stacked.shape[ax]
        new_shape = (stacked.shape[:ax] + (2 * m,) + stacked.shape[ax + 2:])
        out = stacked.reshape(new_shape)
    return out


def analyze(f: GridFunction, system: DyadicSystem, box: Box | None = None,
            coarse_level: int | None = None) -> HaarCoefficients:
    """Full Haar analysis from the finest level down to ``coarse_level``.

    The analysis box is the coarse-level aligned cover of ``box`` (default:
    the function support); the function is extended by zero onto it. The
    coarse level defaults to the system floor but may sit above it when the
    system carries extra levels for goodness decisions.
    """
    if f.level != system.j_max:
        raise ParameterError("function cells must live at the system's finest level")
    if not system.window.contains_box(f.box):
        raise ParameterError("function support lies outside the system window")
    n = system.n
    j0 = system.j_min if coarse_level is None else coarse_level
    if j0 < system.j_min or j0 >= system.j_max:
        raise RangeError(f"coarse level {j0} outside [{system.j_min}, {system.j_max})")
    target = box or f.box
    if not target.contains_box(f.box):
        raise ParameterError("analysis box must contain the function support")
    al = system.aligned_box(j0, target)
    a = _embed(f, al) * f.cell_volume
    details: dict[int, np.ndarray] = {}
    integrals: dict[int, np.ndarray] = {system.j_max: a.copy()}
    for j in range(system.j_max - 1, j0 - 1, -1):
        combos = _forward_step(a, n)
        a = combos[..., 0]
        integrals[j] = a.copy()
        scale = 2.0 ** (j * n / 2.0)
        details[j] = combos[..., 1:] * scale
    coarse = a * 2.0 ** (j0 * n / 2.0)
    return HaarCoefficients(al, j0, system.j_max, details, coarse, integrals)


def synthesize(coeffs: HaarCoefficients, system: DyadicSystem,
               box: Box | None = None) -> GridFunction:
    """Rebuild the grid function; inverse of :func:`analyze` on its box."""
    n = system.n
    d = coeffs.d
    a = coeffs.coarse * 2.0 ** (-coeffs.j_min * n / 2.0)
    for j in range(coeffs.j_min, coeffs.j_max):
        combos = np.empty(a.shape[:-1] + (d, 2 ** n))
        combos[..., 0] = a
        combos[..., 1:] = coeffs.details[j] * 2.0 ** (-j * n / 2.0)
        a = _inverse_step(combos, n)
    vol = 2.0 ** (-coeffs.j_max * n)
    full = GridFunction(coeffs.box, coeffs.j_max, a / vol)
    if box is None or box == coeffs.box:
        return full
    return restrict_to(full, box)


def project(f: GridFunction, j: int, system: DyadicSystem) -> GridFunction:
    """Conditional expectation onto level-j cubes (cellwise averages)."""
    if j < system.j_min or j > system.j_max:
        raise RangeError(f"level {j} outside [{system.j_min}, {system.j_max}]")
    n = system.n
    al = system.aligned_box(system.j_min, f.box)
    vals = _embed(f, al)
    s = system.size(j)
    shape: list[int] = []
    for m in al.extent:
        shape.extend([m // s, s])
    shape.append(f.d)
    blocked = vals.reshape(shape)
    mean_axes = tuple(2 * i + 1 for i in range(n))
    means = blocked.mean(axis=mean_axes, keepdims=True)
    out = np.broadcast_to(means, blocked.shape).reshape(vals.shape)
    return restrict_to(GridFunction(al, f.level, out.copy()), f.box)


def detail(f: GridFunction, j: int, system: DyadicSystem) -> GridFunction:
    """Martingale difference project(f, j+1) - project(f, j)."""
    return project(f, j + 1, system) - project(f, j, system)


def haar_coeff_of(f: GridFunction, index: HaarIndex,
                  system: DyadicSystem) -> np.ndarray:
    """<h^theta_I, f> by a direct cell sum (f is zero outside its box).

    Returns the coefficient in R^d. Works for cubes partially outside the
    support box, which simply contribute nothing.
    """
    cube = index.cube
    size = system.size(cube.level)
    sls = []
    signs = []
    for i in range(f.n):
        lo = max(cube.corner[i], f.box.lo[i])
        hi = min(cube.corner[i] + size, f.box.hi[i])
        if lo >= hi:
            return np.zeros(f.d)
        sls.append(slice(lo - f.box.lo[i], hi - f.box.lo[i]))
        sgn = np.ones(hi - lo)
        if index.theta[i] == 1:
            rel = np.arange(lo, hi) - cube.corner[i]
            sgn[rel >= size // 2] = -1.0
        signs.append(sgn)
    vals = f.values[tuple(sls)]
    pattern = np.ones(())
    for sgn in signs:
        pattern = np.multiply.outer(pattern, sgn)
    mag = 2.0 ** (cube.level * f.n / 2.0)
    axes = tuple(range(f.n))
    return np.sum(vals * pattern[..., None], axis=axes) * f.cell_volume * mag


__all__ = [
    "GridFunction", "HaarIndex", "HaarCoefficients", "zeros",
    "random_grid_function", "pad_to", "restrict_to", "inner_product",
    "lp_norm", "thetas", "theta_index", "haar_value", "haar_function",
    "analyze", "synthesize", "project", "detail",
]
