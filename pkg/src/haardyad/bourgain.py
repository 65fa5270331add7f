"""Smoothing averages, band-limited families, and the multiplier pipeline.

Units: the periodic stage lives on the unit torus with N = 2^L cells; a
scale index s means cubes of 2^s cells (sidelength 2^(L-s) in cell counts
from the right, i.e. dyadic level j = L - s in domain units). Frequencies
are integers k in cycles per domain; in cell-frequency units xi = k / N the
formulas read off the cube side directly: a scale-s family is band-limited
to |2^s xi| <= 1/2, the tent multiplier is tent_hat(2^s xi), and the cutoff
multiplier is sigma(2^s xi).

The smoothing identity is the finite-enumeration analogue: averaging the
averaging-profile sums over all shift states of the levels between the cube
scale and the grid scale equals the tent kernel sampled on the shift
lattice, applied to the cell masses, then translated by the integer
multiple of the cube side. (The continuous-shift average would be the
continuous tent convolution; a finite bit enumeration reaches exactly the
lattice sampling, and the identity below is exact to rounding.)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError, ResourceError
from .haar import GridFunction
from .lattice import BadnessParams, DyadicSystem, is_bad, iter_shift_states
from .martingale import ShiftMap
from .rng import rng_for


def tent(x: np.ndarray) -> np.ndarray:
    """The tensor tent prod_i (1 - |x_i|)_+ (autocorrelation of the unit cell)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    vals = np.clip(1.0 - np.abs(x), 0.0, None)
    return vals if x.ndim == 1 else vals.prod(axis=-1)


def tent_hat(xi: np.ndarray) -> np.ndarray:
    """prod_i sinc^2(pi xi_i) with sinc(u) = sin(u)/u."""
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    vals = np.sinc(xi) ** 2
    return vals if xi.ndim == 1 else vals.prod(axis=-1)


# ---------------------------------------------------------------------------
# smoothing identity on a window


def smoothing_average(f: GridFunction, j: int, m: int, levels: int,
                      max_states: int = 1 << 20) -> dict:
    """Enumerated shift average of averaging-profile sums vs the tent form.

    ``f`` is piecewise constant at level j + levels (one cell per enumerated
    shift value). The enumerated side averages
    sum_I h0_{I+m ell}(x) <h0_I, f> over all 2^levels shift states of the
    levels in (j, j + levels]; the direct side applies the tent kernel at
    scale 2^-j sampled on the shift lattice to the cell masses and
    translates by m 2^-j. Both live on f's box.
    """
    if f.n != 1:
        raise ParameterError("the smoothing identity driver ships for n = 1")
    if f.level != j + levels:
        raise ParameterError("f must live exactly `levels` levels below j")
    states = 1 << levels
    if states > max_states:
        raise ResourceError("enumeration too large", required=states)
    size = states  # cells per level-j cube
    margin = (abs(m) + 1) * size
    n_cells = f.box.extent[0]
    vals = f.values[:, :]
    # enumerated side
    acc = np.zeros_like(vals)
    lo = f.box.lo[0]
    for beta in iter_shift_states(j, j + levels, 1, max_states):
        u = int(beta.offset(j)[0])
        # level-j cubes of this state: corners congruent to u mod size
        first = lo + ((u - lo) % size) - size
        for corner in range(first, lo + n_cells + size, size):
            a = max(corner, lo)
            b = min(corner + size, lo + n_cells)
            if a >= b:
                continue
            integral = vals[a - lo:b - lo].sum(axis=0) * f.cell_volume
            ta = max(corner + m * size, lo)
            tb = min(corner + (m + 1) * size, lo + n_cells)
            if ta < tb:
                acc[ta - lo:tb - lo] += (2.0 ** j) * integral
    averaged = GridFunction(f.box, f.level, acc / states)
    # direct side: tent sampled on the shift lattice against cell masses
    offsets = np.arange(-(size - 1), size)
    weights = tent(offsets / size) / size
    conv = np.stack([np.convolve(vals[:, c], weights, mode="same")
                     for c in range(f.d)], axis=-1)
    direct = np.zeros_like(conv)
    shift = m * size
    src_lo = max(0, -shift)
    src_hi = min(n_cells, n_cells - shift)
    direct[src_lo + shift:src_hi + shift] = conv[src_lo:src_hi]
    convolution = GridFunction(f.box, f.level, direct)
    dev = float(np.abs(averaged.values - convolution.values).max())
    # ignore cells within the margin of the box edge (partial cube coverage)
    inner = slice(margin, n_cells - margin)
    dev_inner = float(np.abs(averaged.values[inner]
                             - convolution.values[inner]).max())
    return {"averaged": averaged, "convolution": convolution,
            "max_deviation": dev_inner, "max_deviation_with_edges": dev}


def dyadic_translate_components(fs, levels, psi: ShiftMap,
                                system: DyadicSystem,
                                good_only: bool = False,
                                params: BadnessParams | None = None,
                                k_max: int | None = None) -> list[GridFunction]:
    """Per-level components sum_{I in D_j (good)} h0_{I + m_j} <h0_I, f_j>.

    The randomized sum is sum_j eps_j (component j); with zero translates
    and the good flag off, component j is the conditional expectation of
    f_j at level j.
    """
    if len(fs) != len(levels):
        raise ParameterError("one function per level required")
    out = []
    for f, j in zip(fs, levels):
        m = psi.translate(j)
        size = system.size(j)
        support = np.argwhere(np.any(f.values != 0, axis=-1))
        if support.size:
            lo_sup = support.min(axis=0) + np.array(f.box.lo)
            hi_sup = support.max(axis=0) + 1 + np.array(f.box.lo)
            for i in range(f.n):
                margin = (abs(m[i]) + 1) * size
                if (lo_sup[i] - f.box.lo[i] < margin
                        or f.box.hi[i] - hi_sup[i] < margin):
                    raise ParameterError("translate exceeds the support margin")
        acc = np.zeros(f.box.extent + (f.d,))
        for cube in system.cubes_at_level(j, f.box):
            if good_only and is_bad(cube, params, system, k_max):
                continue
            cb = system.cube_box(cube)
            sls = []
            ok = True
            integral = None
            src = []
            for i in range(f.n):
                a = max(cb.lo[i], f.box.lo[i])
                b = min(cb.hi[i], f.box.hi[i])
                if a >= b:
                    ok = False
                    break
                src.append(slice(a - f.box.lo[i], b - f.box.lo[i]))
            if not ok:
                continue
            integral = f.values[tuple(src)].sum(axis=tuple(range(f.n))) \
                * f.cell_volume
            tgt = []
            for i in range(f.n):
                a = max(cb.lo[i] + m[i] * size, f.box.lo[i])
                b = min(cb.hi[i] + m[i] * size, f.box.hi[i])
                if a >= b:
                    ok = False
                    break
                tgt.append(slice(a - f.box.lo[i], b - f.box.lo[i]))
            if not ok:
                continue
            acc[tuple(tgt)] += integral * 2.0 ** (j * f.n)
        out.append(GridFunction(f.box, f.level, acc))
    return out


# ---------------------------------------------------------------------------
# periodic grid, band-limited families, multipliers


@dataclass(frozen=True)
class PeriodicGrid:
    """Unit torus with 2^log2_cells cells (one dimension)."""

    log2_cells: int

    @property
    def n_cells(self) -> int:
        return 1 << self.log2_cells

    def freqs(self) -> np.ndarray:
        """Signed integer frequencies in fft order (cycles per domain)."""
        return np.fft.fftfreq(self.n_cells) * self.n_cells


@dataclass(eq=False)
class BandlimitedFamily:
    """Real functions f_j on the grid, band-limited per scale.

    Scale s_j means cubes of 2^(s_j) cells; the spectrum is confined to
    |k| <= 2^(L - s_j - 1), i.e. |2^(s_j) xi| <= 1/2 in cell-frequency
    units, the exact recovery band of the cutoff multiplier.
    """

    grid: PeriodicGrid
    scales: list[int]
    funcs: np.ndarray  # (J, N)

    @property
    def count(self) -> int:
        return len(self.scales)

    def band_radius(self, idx: int) -> int:
        return 1 << (self.grid.log2_cells - self.scales[idx] - 1)

    def spectrum_leakage(self) -> float:
        """Max relative spectral mass outside the declared balls."""
        worst = 0.0
        k = np.abs(self.grid.freqs())
        for i in range(self.count):
            spec = np.abs(np.fft.fft(self.funcs[i]))
            inside = spec[k <= self.band_radius(i)].max()
            out = spec[k > self.band_radius(i)]
            if out.size and inside > 0:
                worst = max(worst, float(out.max() / inside))
        return worst

    @classmethod
    def random(cls, grid: PeriodicGrid, scales, seed: int = 0) -> "BandlimitedFamily":
        """Random trig polynomials, iid standard normal coefficients per mode."""
        scales = [int(s) for s in scales]
        n = grid.n_cells
        funcs = np.zeros((len(scales), n))
        for i, s in enumerate(scales):
            if not (0 <= s <= grid.log2_cells - 2):
                raise RangeError("scale leaves no usable frequencies")
            radius = 1 << (grid.log2_cells - s - 1)
            rng = rng_for(seed, 100 + i)
            x = np.arange(n) / n
            vals = np.zeros(n)
            for k in range(0, radius + 1):
                a, b = rng.standard_normal(2)
                if k == 0:
                    vals += a
                else:
                    vals += a * np.cos(2 * np.pi * k * x) \
                        + b * np.sin(2 * np.pi * k * x)
            funcs[i] = vals
        return cls(grid, scales, funcs)


def smooth_bump(t: np.ndarray) -> np.ndarray:
    """C-infinity cutoff: 1 on |t| <= 1/2, 0 beyond |t| >= 0.9.

    The transition is the standard exp(-1/v) smooth step rescaled to the
    shell 1/2 < |t| < 0.9.
    """
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 0.9)
    v = (0.9 - t[mid]) / 0.4
    b = np.exp(-1.0 / v)
    b1 = np.exp(-1.0 / (1.0 - v))
    out[mid] = b / (b + b1)
    return out


@dataclass(eq=False)
class MultiplierSpec:
    """The cutoff multiplier sigma(u) = exp(-2 pi i z u) chi(u).

    chi = bump / tent_hat satisfies chi * tent_hat = bump = 1 exactly on
    |u| <= 1/2 and vanishes for |u| >= 0.9.
    """

    z: float = 0.0

    def chi(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        psi = smooth_bump(u)
        out = np.zeros_like(psi)
        mask = psi > 0
        out[mask] = psi[mask] / tent_hat(u[mask])
        return out

    def sigma(self, u: np.ndarray) -> np.ndarray:
        return np.exp(-2j * np.pi * self.z * np.asarray(u)) * self.chi(u)

    def variation(self, samples: int = 1 << 16) -> float:
        """int |sigma'(u)| du = int sqrt(chi'^2 + (2 pi z chi)^2) du."""
        u = np.linspace(-1.0, 1.0, samples)
        chi = self.chi(u)
        dchi = np.gradient(chi, u)
        integrand = np.sqrt(dchi ** 2 + (2.0 * np.pi * self.z * chi) ** 2)
        return float(np.trapezoid(integrand, u))


def smooth_translate(grid: PeriodicGrid, f: np.ndarray, scale: int,
                     m: int) -> np.ndarray:
    """(phi_{2^j} * f)(. - 2^-j m): tent multiplier at the scale, integer roll."""
    spec = np.fft.fft(f) * tent_hat((1 << scale) * grid.freqs() / grid.n_cells)
    return np.roll(np.fft.ifft(spec).real, m * (1 << scale))


def apply_Tj(grid: PeriodicGrid, g: np.ndarray, scale: int,
             spec: MultiplierSpec) -> np.ndarray:
    """Fourier multiplier sigma(2^s xi) in cell-frequency units."""
    u = (1 << scale) * grid.freqs() / grid.n_cells
    return np.fft.ifft(np.fft.fft(g) * spec.sigma(u)).real


def fourier_translate(grid: PeriodicGrid, f: np.ndarray, cells: float) -> np.ndarray:
    """Exact translation by a possibly fractional number of cells."""
    if float(cells).is_integer():
        return np.roll(f, int(cells))
    phase = np.exp(-2j * np.pi * grid.freqs() * cells / grid.n_cells)
    return np.fft.ifft(np.fft.fft(f) * phase).real


def pipeline_identity(grid: PeriodicGrid, family: BandlimitedFamily,
                      ys) -> dict:
    """Relative L2 error of f_j(. - 2^-j y_j) = T_j[phi-smooth, m_j-shifted f_j].

    m_j is the integer nearest to y_j and z_j = y_j - m_j in [-1/2, 1/2).
    """
    errs = []
    for i, y in enumerate(ys):
        s = family.scales[i]
        m = math.floor(y + 0.5)
        z = y - m
        f = family.funcs[i]
        lhs = fourier_translate(grid, f, y * (1 << s))
        rhs = apply_Tj(grid, smooth_translate(grid, f, s, m), s,
                       MultiplierSpec(z=z))
        denom = np.sqrt(np.mean(lhs ** 2))
        errs.append(float(np.sqrt(np.mean((lhs - rhs) ** 2)) / denom))
    return {"relative_l2_errors": errs, "max_error": max(errs)}


# ---------------------------------------------------------------------------
# randomized norms and experiments


@dataclass(frozen=True)
class SignEnsemble:
    mode: str = "exhaustive"
    count: int = 0
    seed: int = 0

    def patterns(self, j: int) -> np.ndarray:
        if self.mode == "exhaustive":
            if j > 20:
                raise ResourceError("exhaustive sign ensemble too large",
                                    required=1 << j)
            grid = np.array(list(itertools.product((-1.0, 1.0), repeat=j)))
            return grid
        if self.mode == "sampled":
            if self.count < 1:
                raise ParameterError("sampled ensemble needs a count")
            rng = rng_for(self.seed, 55)
            return rng.integers(0, 2, size=(self.count, j)) * 2.0 - 1.0
        raise ParameterError(f"unknown sign mode {self.mode!r}")


def randomized_norm(gs: np.ndarray, signs: SignEnsemble, p: float) -> float:
    """(E_eps ||sum_j eps_j g_j||_p^p)^(1/p) on the unit torus grid."""
    gs = np.asarray(gs, dtype=np.float64)
    if gs.ndim != 2 or gs.shape[0] == 0:
        raise ParameterError("need a nonempty family of grid functions")
    eps = signs.patterns(gs.shape[0])
    sums = eps @ gs
    return float((np.mean(np.abs(sums) ** p)) ** (1.0 / p))


def randomized_norm_grid(fs: list[GridFunction], signs: SignEnsemble,
                         p: float) -> float:
    """Randomized L^p norm for window grid functions (common box)."""
    if not fs:
        raise ParameterError("need a nonempty family")
    vol = fs[0].cell_volume
    mat = np.stack([f.values.reshape(-1) for f in fs])
    eps = signs.patterns(len(fs))
    sums = eps @ mat
    return float((np.mean(np.sum(np.abs(sums) ** p, axis=1) * vol)) ** (1.0 / p))


def translation_experiment(p: float, j_count: int, ys, seed: int = 0,
                           grid_log2: int = 12,
                           signs: SignEnsemble | None = None) -> dict:
    """Norm ratios R(y) of translated vs untranslated randomized sums.

    Scales are s_j = j for j = 1..J; each level is translated by y times
    its own cube side (2^(s_j) y cells). Reports R(y) and the normalized
    ratio R(y) / (1 + log2+ |y|).
    """
    if signs is None:
        signs = SignEnsemble("exhaustive") if p == 2.0 else \
            SignEnsemble("sampled", count=1000, seed=seed)
    grid = PeriodicGrid(grid_log2)
    scales = list(range(1, j_count + 1))
    family = BandlimitedFamily.random(grid, scales, seed)
    base = randomized_norm(family.funcs, signs, p)
    rows = []
    for y in ys:
        moved = np.stack([
            fourier_translate(grid, family.funcs[i], y * (1 << scales[i]))
            for i in range(family.count)])
        r = randomized_norm(moved, signs, p) / base
        env = 1.0 + max(0.0, math.log2(abs(y))) if y != 0 else 1.0
        rows.append({"y": y, "ratio": r, "normalized": r / env})
    return {"p": p, "rows": rows, "base_norm": base}


def stein_check(p: float, j_count: int = 6, seed: int = 0,
                grid_log2: int = 12,
                signs: SignEnsemble | None = None) -> dict:
    """Randomized-norm ratio of conditional expectations vs the family."""
    if signs is None:
        signs = SignEnsemble("exhaustive") if j_count <= 12 else \
            SignEnsemble("sampled", count=1000, seed=seed)
    grid = PeriodicGrid(grid_log2)
    scales = list(range(1, j_count + 1))
    family = BandlimitedFamily.random(grid, scales, seed)
    proj = np.stack([
        _block_average(family.funcs[i], 1 << scales[i])
        for i in range(family.count)])
    lhs = randomized_norm(proj, signs, p)
    rhs = randomized_norm(family.funcs, signs, p)
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}


def _block_average(f: np.ndarray, block: int) -> np.ndarray:
    means = f.reshape(-1, block).mean(axis=1)
    return np.repeat(means, block)


__all__ = [
    "tent", "tent_hat", "smoothing_average", "dyadic_translate_components",
    "PeriodicGrid", "BandlimitedFamily", "smooth_bump", "MultiplierSpec",
    "smooth_translate", "apply_Tj", "fourier_translate", "pipeline_identity",
    "SignEnsemble", "randomized_norm", "randomized_norm_grid",
    "translation_experiment", "stein_check",
]
