"""Singular kernels, pairings <g, Tf>, and Haar coefficient tables.

Shipped kernels are antisymmetric convolution kernels (so the identical-cell
principal value vanishes exactly and both paraproduct coefficients tend to
zero): the Hilbert kernel 1/(pi (x-y)) in one dimension and the odd
homogeneous kernel (x1-y1)/|x-y|^3 in two. Pairings of piecewise-constant
functions reduce to cell-pair integrals, which for convolution kernels are
cached per (scale, offset); see :mod:`haardyad.quadrature` for the rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quadrature as quad
from .errors import ConfigError, ParameterError, UnsupportedError
from .haar import GridFunction, thetas
from .lattice import DyadicCube
from .quadrature import QuadratureOptions
from .rng import rng_for


@dataclass(eq=False)
class CZKernel:
    """Calderon-Zygmund kernel with declared standard-estimate constants.

    ``evaluate(x, y)`` works on arrays shaped (..., n). Convolution kernels
    also carry the difference form ``diff(t)`` and a quadrature dispatch id.
    """

    name: str
    n: int
    alpha: float
    antisymmetric: bool
    size_constant: float
    holder_constant: float
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    convolution: bool = False
    kind: int | None = None
    diff: Callable[[np.ndarray], np.ndarray] | None = None
    _tables: dict = field(default_factory=dict, repr=False)
    _memo: dict = field(default_factory=dict, repr=False)

    def cell_table(self, level: int, offsets: np.ndarray,
                   opts: QuadratureOptions = QuadratureOptions(),
                   use_numba: bool | None = None) -> np.ndarray:
        """Cached cell-pair integrals at cell size 2^-level per offset.

        Nonconvolution kernels have no offset table; callers must use the
        generic pairing path.
        """
        if not self.convolution or self.kind is None:
            raise UnsupportedError("offset tables exist only for convolution kernels")
        key = (level, opts.order, opts.tol)
        cache = self._tables.setdefault(key, {})
        offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, self.n)
        missing = [tuple(o) for o in offsets if tuple(o) not in cache]
        missing = sorted(set(missing))
        if missing:
            zero = (0,) * self.n
            nz = [o for o in missing if o != zero]
            if len(nz) < len(missing):
                if not self.antisymmetric:
                    raise UnsupportedError(
                        "identical-cell principal value is defined here only "
                        "for antisymmetric kernels")
                cache[zero] = 0.0
            if nz:
                vals = quad.cell_pair_table(
                    self.kind, self.n, 2.0 ** (-level),
                    np.array(nz, dtype=np.int64), opts, use_numba)
                for o, v in zip(nz, vals):
                    cache[o] = float(v)
        return np.array([cache[tuple(o)] for o in offsets])


def _hilbert_diff(t: np.ndarray) -> np.ndarray:
    return 1.0 / (np.pi * t[..., 0])


def _riesz_diff(t: np.ndarray) -> np.ndarray:
    r2 = t[..., 0] ** 2 + t[..., 1] ** 2
    return t[..., 0] / r2 ** 1.5


def hilbert_kernel() -> CZKernel:
    return CZKernel(
        name="hilbert", n=1, alpha=1.0, antisymmetric=True,
        size_constant=1.0 / math.pi, holder_constant=2.0 / math.pi,
        evaluate=lambda x, y: _hilbert_diff(np.asarray(x) - np.asarray(y)),
        convolution=True, kind=quad.KIND_HILBERT, diff=_hilbert_diff)


def riesz2d_kernel() -> CZKernel:
    return CZKernel(
        name="riesz2d", n=2, alpha=1.0, antisymmetric=True,
        size_constant=1.0, holder_constant=6.0,
        evaluate=lambda x, y: _riesz_diff(np.asarray(x) - np.asarray(y)),
        convolution=True, kind=quad.KIND_RIESZ1_2D, diff=_riesz_diff)


KERNELS: dict[str, Callable[[], CZKernel]] = {
    "hilbert": hilbert_kernel,
    "riesz2d": riesz2d_kernel,
}


def kernel_by_name(name: str) -> CZKernel:
    try:
        return KERNELS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown kernel {name!r}; shipped kernels: {sorted(KERNELS)}") from None


def check_standard_estimates(kernel: CZKernel, samples: int = 256,
                             seed: int = 0) -> dict:
    """Spot-check the size and Holder bounds on random point pairs."""
    rng = rng_for(seed, 17)
    n = kernel.n
    x = rng.uniform(-4, 4, size=(samples, n))
    y = rng.uniform(-4, 4, size=(samples, n))
    dist = np.sqrt(((x - y) ** 2).sum(axis=1))
    keep = dist > 1e-3
    x, y, dist = x[keep], y[keep], dist[keep]
    size_ratio = np.abs(kernel.evaluate(x, y)) * dist ** n / kernel.size_constant
    hvec = rng.uniform(-1, 1, size=x.shape)
    hnorm = np.sqrt((hvec ** 2).sum(axis=1))
    scale = dist / (4.0 * hnorm)  # enforce |x - y| > 2|h| with margin
    hvec = hvec * scale[:, None]
    hnorm = hnorm * scale
    diff = np.abs(kernel.evaluate(x + hvec, y) - kernel.evaluate(x, y))
    holder_ratio = diff * dist ** (n + kernel.alpha) / (
        hnorm ** kernel.alpha * kernel.holder_constant)
    return {
        "size_max_ratio": float(size_ratio.max()),
        "holder_max_ratio": float(holder_ratio.max()),
        "size_ok": bool(size_ratio.max() <= 1.0 + 1e-9),
        "holder_ok": bool(holder_ratio.max() <= 1.0 + 1e-9),
    }


# ---------------------------------------------------------------------------
# pairings


def _correlate_nd(gv: np.ndarray, fv: np.ndarray, table: np.ndarray) -> float:
    """sum_{i,j} g_i f_j W(i - j) for same-shape value grids.

    ``table`` covers offsets -(ext-1)..(ext-1) per axis, in order.
    """
    n = gv.ndim - 1
    d = gv.shape[-1]
    ext = gv.shape[:-1]
    total = 0.0
    if n == 1:
        for c in range(d):
            # numpy full correlation: index k holds sum_j g[j + k - (ext-1)] f[j]
            cc = np.correlate(gv[:, c], fv[:, c], mode="full")
            total += float(np.dot(cc, table))
        return total
    from numpy.fft import irfftn, rfftn

    full = tuple(2 * e - 1 for e in ext)
    axes = (0, 1)
    offs = [np.arange(-(e - 1), e) for e in ext]
    for c in range(d):
        spec = rfftn(gv[..., c], full, axes=axes) \
            * np.conj(rfftn(fv[..., c], full, axes=axes))
        cc = irfftn(spec, full, axes=axes)
        cc = cc[np.ix_(offs[0] % full[0], offs[1] % full[1])]
        total += float(np.sum(cc * table))
    return total


def pairing(g: GridFunction, kernel: CZKernel, f: GridFunction,
            opts: QuadratureOptions = QuadratureOptions(),
            use_numba: bool | None = None) -> float:
    """<g, Tf> for piecewise-constant f, g on a common window.

    Convolution kernels go through cached offset tables; the identical-cell
    slot is the principal value and contributes zero for antisymmetric
    kernels (and is rejected otherwise).
    """
    g._check_same_window(f)
    if g.n != kernel.n:
        raise ParameterError("kernel dimension does not match the functions")
    if kernel.convolution:
        n = kernel.n
        ext = f.box.extent
        if n == 1:
            offsets = np.arange(-(ext[0] - 1), ext[0], dtype=np.int64)
            table = kernel.cell_table(f.level, offsets[:, None], opts, use_numba)
            return _correlate_nd(g.values, f.values, table)
        grid0 = np.arange(-(ext[0] - 1), ext[0], dtype=np.int64)
        grid1 = np.arange(-(ext[1] - 1), ext[1], dtype=np.int64)
        o0, o1 = np.meshgrid(grid0, grid1, indexing="ij")
        offsets = np.stack([o0.ravel(), o1.ravel()], axis=-1)
        table = kernel.cell_table(f.level, offsets, opts, use_numba)
        table = table.reshape(grid0.size, grid1.size)
        return _correlate_nd(g.values, f.values, table)
    return _pairing_generic(g, kernel, f, opts)


def _gauss_pair_x(kernel, ax, bx, ay, by, nodes, weights):
    """Tensor Gauss for int_ax^bx int_ay^by K(x, y) dy dx (1D cells)."""
    cx, rx = 0.5 * (ax + bx), 0.5 * (bx - ax)
    cy, ry = 0.5 * (ay + by), 0.5 * (by - ay)
    x = (cx + rx * nodes)[:, None, None]
    y = (cy + ry * nodes)[None, :, None]
    vals = kernel.evaluate(np.broadcast_to(x, (nodes.size, nodes.size, 1)),
                           np.broadcast_to(y, (nodes.size, nodes.size, 1)))
    w = np.outer(weights, weights)
    return float(rx * ry * np.sum(vals * w))


def _pairing_generic(g: GridFunction, kernel: CZKernel, f: GridFunction,
                     opts: QuadratureOptions) -> float:
    """Cell-pair loop with x-space quadrature; 1D only, test-scale sizes."""
    if kernel.n != 1:
        raise UnsupportedError(
            "generic (nonconvolution) pairings are shipped for n = 1 only")
    nodes, weights = opts.nodes()
    h = 2.0 ** (-f.level)
    lo = f.box.lo[0]
    m = f.box.extent[0]
    if m > 512:
        raise UnsupportedError("generic pairing path is limited to 512 cells")
    gv, fv = g.values[:, 0], f.values[:, 0]
    total = 0.0
    for i in range(m):          # x cell (g side)
        if gv[i] == 0.0:
            continue
        ax, bx = (lo + i) * h, (lo + i + 1) * h
        for j in range(m):      # y cell (f side)
            if fv[j] == 0.0:
                continue
            if i == j:
                if not kernel.antisymmetric:
                    raise UnsupportedError(
                        "principal value requires an antisymmetric kernel")
                continue
            ay, by = (lo + j) * h, (lo + j + 1) * h
            if abs(i - j) >= 2:
                total += gv[i] * fv[j] * _gauss_pair_x(
                    kernel, ax, bx, ay, by, nodes, weights)
            else:
                # peel both cells toward the shared point by halves
                sx, sy = (ax, bx), (ay, by)
                shared = bx if j > i else ax
                val = 0.0
                for _ in range(opts.max_depth):
                    mx = 0.5 * (sx[0] + sx[1])
                    my = 0.5 * (sy[0] + sy[1])
                    nearx = (mx, sx[1]) if j > i else (sx[0], mx)
                    farx = (sx[0], mx) if j > i else (mx, sx[1])
                    neary = (sy[0], my) if j > i else (my, sy[1])
                    fary = (my, sy[1]) if j > i else (sy[0], my)
                    c = (_gauss_pair_x(kernel, *farx, *sy, nodes, weights)
                         + _gauss_pair_x(kernel, *nearx, *fary, nodes, weights))
                    val += c
                    sx, sy = nearx, neary
                    if abs(c) < opts.tol:
                        break
                total += gv[i] * fv[j] * val
    return total


def _sign_matrix(n: int) -> np.ndarray:
    """signs[pattern, half-cell] for the tensor Haar profiles."""
    pats = thetas(n, include_zero=True)
    out = np.ones((2 ** n, 2 ** n))
    for a, pat in enumerate(pats):
        for q, cell in enumerate(pats):
            out[a, q] = (-1.0) ** sum(c for c, bit in zip(cell, pat) if bit)
    return out


def haar_coeff_block(kernel: CZKernel, level: int, ms,
                     opts: QuadratureOptions = QuadratureOptions(),
                     use_numba: bool | None = None) -> np.ndarray:
    """Coefficient matrices <h^eta_{I+m}, T h^theta_I> for many translates.

    Returns shape (len(ms), 2^n, 2^n) indexed by the ``thetas`` pattern
    order (slot [0, 0] is not a Haar coefficient and is left in place; the
    callers mask it). Both profiles are constant on the 2^n half-cells of
    their cubes, so each entry is a signed sum of cell-pair integrals at
    scale ell(I)/2, gathered through one table lookup.
    """
    n = kernel.n
    if not kernel.convolution:
        raise UnsupportedError("coefficient tables require a convolution kernel")
    ms = np.asarray(list(ms), dtype=np.int64).reshape(-1, n)
    cells = np.array(thetas(n, include_zero=True), dtype=np.int64)  # (2^n, n)
    # offsets[m, qg, qf] = 2 m + qg - qf
    offsets = (2 * ms[:, None, None, :] + cells[None, :, None, :]
               - cells[None, None, :, :])
    flat = offsets.reshape(-1, n)
    vals = kernel.cell_table(level + 1, flat, opts, use_numba)
    w = vals.reshape(ms.shape[0], 2 ** n, 2 ** n)
    signs = _sign_matrix(n)
    norm = 2.0 ** (level * n)  # |I|^{-1/2} |J|^{-1/2} = |I|^{-1}
    return norm * np.einsum("aq,mqr,br->mab", signs, w, signs)


def haar_coeff(kernel: CZKernel, cube: DyadicCube, m, eta, theta,
               opts: QuadratureOptions = QuadratureOptions(),
               use_numba: bool | None = None) -> float:
    """<h^eta_{I + m ell(I)}, T h^theta_I> via half-cell offset tables."""
    n = kernel.n
    eta = tuple(eta)
    theta = tuple(theta)
    m = tuple(int(v) for v in (m if np.iterable(m) else (m,)))
    if len(m) != n or len(eta) != n or len(theta) != n:
        raise ParameterError("dimension mismatch in haar_coeff")
    if not any(eta) and not any(theta):
        raise ParameterError("(eta, theta) = (0, 0) is excluded")
    block = haar_coeff_block(kernel, cube.level, [m], opts, use_numba)
    return float(block[0, _theta_slot(eta), _theta_slot(theta)])


def _theta_slot(pattern: tuple[int, ...]) -> int:
    n = len(pattern)
    return sum(pattern[i] << (n - 1 - i) for i in range(n))


@dataclass(eq=False)
class CoeffTable:
    """Haar coefficient matrices per translate m around a reference cube."""

    kernel_name: str
    n: int
    alpha: float
    cube: DyadicCube
    entries: dict[tuple, np.ndarray]  # m -> (2^n, 2^n), slot [0,0] unused (nan)
    m_max: int

    def max_abs(self, m) -> float:
        mat = self.entries[tuple(m)]
        return float(np.nanmax(np.abs(mat)))

    def to_rows(self):
        pats = thetas(self.n, include_zero=True)
        for m, mat in sorted(self.entries.items()):
            for a, eta in enumerate(pats):
                for b, th in enumerate(pats):
                    if a == 0 and b == 0:
                        continue
                    yield m, eta, th, float(mat[a, b])


def coeff_table(kernel: CZKernel, cube: DyadicCube, ms,
                opts: QuadratureOptions = QuadratureOptions(),
                use_numba: bool | None = None) -> CoeffTable:
    """All Haar coefficient entries for the given translates."""
    n = kernel.n
    ms = [tuple(int(v) for v in (m if np.iterable(m) else (m,))) for m in ms]
    block = haar_coeff_block(kernel, cube.level, ms, opts, use_numba)
    block[:, 0, 0] = np.nan
    entries = {m: block[i] for i, m in enumerate(ms)}
    m_max = max(int(np.abs(np.asarray(m)).max()) for m in ms)
    return CoeffTable(kernel.name, n, kernel.alpha, cube, entries, m_max)


@dataclass(frozen=True)
class DecayReport:
    table: CoeffTable
    fitted_slope: float
    ls_constant: float
    fitted_constant: float   # envelope: max |coeff| (1 + |m|)^{n + alpha}

    def envelope_holds(self) -> bool:
        n_alpha = self.table.n + self.table.alpha
        for m in self.table.entries:
            r = 1.0 + float(np.linalg.norm(m))
            if self.table.max_abs(m) > self.fitted_constant * r ** (-n_alpha) * (1 + 1e-12):
                return False
        return True


def decay_check(kernel: CZKernel, cube: DyadicCube, m_max: int,
                ms=None, opts: QuadratureOptions = QuadratureOptions(),
                use_numba: bool | None = None) -> DecayReport:
    """Power-law decay fit of max_{eta,theta} |coeff| over the translates.

    The log-log slope is fitted against |m| (the power-law abscissa; the
    slope target is -(n + alpha)). The envelope constant is reported in the
    uniform bound shape C (1 + |m|)^{-n-alpha}. Default translates are
    m = 1..m_max along the first axis, m_max sample points.
    """
    if m_max < 8:
        raise ParameterError("decay fits need m_max >= 8")
    if ms is None:
        ms = [(k,) + (0,) * (kernel.n - 1) for k in range(1, m_max + 1)]
    table = coeff_table(kernel, cube, ms, opts, use_numba)
    radii = np.array([float(np.linalg.norm(m)) for m in table.entries])
    peaks = np.array([table.max_abs(m) for m in table.entries])
    keep = (peaks > 0) & (radii > 0)
    slope, logc = np.polyfit(np.log(radii[keep]), np.log(peaks[keep]), 1)
    n_alpha = kernel.n + kernel.alpha
    envelope = float((peaks * (1.0 + radii) ** n_alpha).max())
    return DecayReport(table, float(slope), float(math.exp(logc)), envelope)


@dataclass(frozen=True)
class SummabilityReport:
    partial_sum: float
    tail_bound: float
    m_max: int

    @property
    def total(self) -> float:
        return self.partial_sum + self.tail_bound


def summability_check(report: DecayReport) -> SummabilityReport:
    """Partial sum of (1 + log2+ |m|) sup |coeff| plus an analytic tail.

    The tail bounds the sum over |m|_oo > m_max using the fitted envelope
    C (1+|m|)^{-n-alpha}: sup-norm shells of radius k carry at most 2 (n=1)
    or 8k (n=2) lattice points, each with |m| >= k. The shell series is
    summed numerically far past the fitted range and closed with an integral
    remainder.
    """
    table = report.table
    n, alpha = table.n, table.alpha
    c = report.fitted_constant
    partial = 0.0
    for m in table.entries:
        r = float(np.linalg.norm(m))
        logplus = max(0.0, math.log2(r)) if r > 0 else 0.0
        partial += (1.0 + logplus) * table.max_abs(m)
    big_m = max(table.m_max, 1)
    ks = np.arange(big_m + 1, 10 ** 6, dtype=np.float64)
    count = 2.0 if n == 1 else 8.0 * ks
    shell = count * (1.0 + np.log2(ks)) * c * (1.0 + ks) ** (-n - alpha)
    far = float(ks[-1])
    # integral remainder beyond the numeric range, crude but safe
    count_far = 2.0 if n == 1 else 8.0 * far * 2.0
    remainder = count_far * (1.0 + math.log2(far)) * c \
        * far ** (1 - n - alpha) / (n + alpha - 1)
    tail = float(shell.sum() + remainder)
    return SummabilityReport(float(partial), tail, table.m_max)


def far_field_value(kernel: CZKernel, g: GridFunction, f: GridFunction) -> float:
    """Midpoint approximation |I| |J| K(c_I, c_J) for separated supports."""
    h = 2.0 ** (-f.level)

    def support_center(fn):
        mask = np.any(fn.values != 0, axis=-1)
        idx = np.argwhere(mask)
        return (np.array(fn.box.lo) + (idx.min(0) + idx.max(0) + 1) / 2.0) * h

    cg, cf = support_center(g), support_center(f)
    vg = float(np.sum(np.any(g.values != 0, axis=-1))) * g.cell_volume
    vf = float(np.sum(np.any(f.values != 0, axis=-1))) * f.cell_volume
    gbar = g.values.sum() * g.cell_volume / vg
    fbar = f.values.sum() * f.cell_volume / vf
    k = float(kernel.evaluate(cg[None, :], cf[None, :])[0])
    return vg * vf * gbar * fbar * k


__all__ = [
    "CZKernel", "hilbert_kernel", "riesz2d_kernel", "KERNELS",
    "kernel_by_name", "check_standard_estimates", "pairing", "haar_coeff",
    "CoeffTable", "coeff_table", "DecayReport", "decay_check",
    "SummabilityReport", "summability_check", "far_field_value",
]
