"""Cell-pair integrals of convolution kernels in difference coordinates.

For a convolution kernel K(x, y) = k(x - y) and two axis-aligned cells of
common side h at integer offset o (in units of h), the pair integral equals

    int k(t) * w(t) dt,   w(t) = prod_i (h - |t_i - o_i h|)_+ ,

the correlation weight of the two indicator functions. The shared face of
touching cells maps to the single singular point t = 0, where the scheme of
record applies: geometric subdivision with ratio 1/2 toward the singularity,
a fixed-order Gauss rule per axis on every subcell, and refinement until a
subcell contribution falls below the stop threshold.

Separated offsets are smooth and use the fixed-order tensor rule on panels
split at the weight kinks. Identical cells (o = 0) are the principal-value
slot and are handled by the caller (zero for antisymmetric kernels).

Hot paths (1D/2D separated tables, 1D touching rings) carry numba builds
with pure-numpy twins; the 2D touching shells are cold (at most eight
offsets per table) and share one numpy implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._accel import NUMBA_ENABLED, njit
from .errors import ParameterError

KIND_HILBERT = 0       # n=1: k(t) = 1 / (pi t)
KIND_RIESZ1_2D = 1     # n=2: k(t) = t1 / |t|^3


def kernel_diff(kind: int, t: np.ndarray) -> np.ndarray:
    """Vectorized difference kernel; ``t`` has shape (..., n)."""
    if kind == KIND_HILBERT:
        return 1.0 / (np.pi * t[..., 0])
    if kind == KIND_RIESZ1_2D:
        r2 = t[..., 0] ** 2 + t[..., 1] ** 2
        return t[..., 0] / r2 ** 1.5
    raise ParameterError(f"unknown kernel kind {kind}")


@dataclass(frozen=True)
class QuadratureOptions:
    """Gauss order per axis, subdivision stop threshold, depth cap."""

    order: int = 8
    tol: float = 1e-12
    max_depth: int = 80

    def nodes(self):
        return _gauss_cache(self.order)


_GAUSS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_cache(order: int):
    if order not in _GAUSS:
        x, w = leggauss(order)
        _GAUSS[order] = (x.copy(), w.copy())
    return _GAUSS[order]


# ---------------------------------------------------------------------------
# 1D


def _k1_np(kind: int, t: np.ndarray) -> np.ndarray:
    if kind == KIND_HILBERT:
        return 1.0 / (np.pi * t)
    raise ParameterError(f"kernel kind {kind} is not one-dimensional")


@njit(cache=True)
def _k1_jit(kind, t):  # pragma: no cover - jit body
    return 1.0 / (np.pi * t)


def _sep_table_1d_numpy(kind, h, offsets, nodes, weights):
    """Panels [(o-1)h, oh] and [oh, (o+1)h] with linear tent weights."""
    o = offsets.astype(np.float64)[:, None]
    x = nodes[None, :]
    w = weights[None, :]
    half = h / 2.0
    # left panel: t = (o-1)h .. oh, weight t - (o-1)h
    t_l = (o - 0.5) * h + half * x
    v_l = _k1_np(kind, t_l) * (t_l - (o - 1.0) * h)
    # right panel: t = oh .. (o+1)h, weight (o+1)h - t
    t_r = (o + 0.5) * h + half * x
    v_r = _k1_np(kind, t_r) * ((o + 1.0) * h - t_r)
    return half * ((v_l + v_r) * w).sum(axis=1)


@njit(cache=True)
def _sep_table_1d_jit(kind, h, offsets, nodes, weights):  # pragma: no cover
    m = offsets.shape[0]
    out = np.zeros(m)
    half = h / 2.0
    for i in range(m):
        o = float(offsets[i])
        acc = 0.0
        for q in range(nodes.shape[0]):
            t_l = (o - 0.5) * h + half * nodes[q]
            acc += weights[q] * _k1_jit(kind, t_l) * (t_l - (o - 1.0) * h)
            t_r = (o + 0.5) * h + half * nodes[q]
            acc += weights[q] * _k1_jit(kind, t_r) * ((o + 1.0) * h - t_r)
        out[i] = half * acc
    return out


def _touch_1d_numpy(kind, h, sign, nodes, weights, tol, max_depth):
    """Offset +-1: far panel plus geometric rings toward t = 0."""
    # far panel: |t| in [h, 2h], weight 2h - |t|
    mid, half = 1.5 * h, 0.5 * h
    t = sign * (mid + half * nodes)
    total = half * np.sum(weights * _k1_np(kind, t) * (2.0 * h - np.abs(t)))
    s = h
    for _ in range(max_depth):
        # ring |t| in [s/2, s], weight |t|
        c, r = 0.75 * s, 0.25 * s
        t = sign * (c + r * nodes)
        contrib = r * np.sum(weights * _k1_np(kind, t) * np.abs(t))
        total += contrib
        if abs(contrib) < tol:
            break
        s *= 0.5
    return total


@njit(cache=True)
def _touch_1d_jit(kind, h, sign, nodes, weights, tol, max_depth):  # pragma: no cover
    mid = 1.5 * h
    half = 0.5 * h
    total = 0.0
    for q in range(nodes.shape[0]):
        t = sign * (mid + half * nodes[q])
        total += half * weights[q] * _k1_jit(kind, t) * (2.0 * h - abs(t))
    s = h
    for _ in range(max_depth):
        c = 0.75 * s
        r = 0.25 * s
        contrib = 0.0
        for q in range(nodes.shape[0]):
            t = sign * (c + r * nodes[q])
            contrib += r * weights[q] * _k1_jit(kind, t) * abs(t)
        total += contrib
        if abs(contrib) < tol:
            break
        s *= 0.5
    return total


def table_1d(kind: int, h: float, offsets: np.ndarray,
             opts: QuadratureOptions = QuadratureOptions(),
             use_numba: bool | None = None) -> np.ndarray:
    """Cell-pair integrals for 1D integer offsets (0 handled by caller)."""
    use = NUMBA_ENABLED if use_numba is None else use_numba
    offsets = np.asarray(offsets, dtype=np.int64)
    nodes, weights = opts.nodes()
    out = np.zeros(offsets.shape[0])
    sep = np.abs(offsets) >= 2
    if sep.any():
        fn = _sep_table_1d_jit if use else _sep_table_1d_numpy
        out[sep] = fn(kind, float(h), offsets[sep], nodes, weights)
    fn_t = _touch_1d_jit if use else _touch_1d_numpy
    for i in np.nonzero(np.abs(offsets) == 1)[0]:
        out[i] = fn_t(kind, float(h), float(offsets[i]), nodes, weights,
                      opts.tol, opts.max_depth)
    if np.any(offsets == 0):
        raise ParameterError("offset 0 is a principal-value slot; handled upstream")
    return out


# ---------------------------------------------------------------------------
# 2D


def _k2_np(kind, t1, t2):
    if kind == KIND_RIESZ1_2D:
        return t1 / (t1 ** 2 + t2 ** 2) ** 1.5
    raise ParameterError(f"kernel kind {kind} is not two-dimensional")


@njit(cache=True)
def _k2_jit(kind, t1, t2):  # pragma: no cover - jit body
    return t1 / (t1 ** 2 + t2 ** 2) ** 1.5


def _axis_panels(o: int, h: float) -> list[tuple[float, float]]:
    """Per-axis panels split at the tent kink t = o h."""
    return [((o - 1) * h, o * h), (o * h, (o + 1) * h)]


def _tent(o: int, h: float, t: np.ndarray) -> np.ndarray:
    return h - np.abs(t - o * h)


def _gauss_rects_numpy(kind, rects, o1, o2, h, nodes, weights):
    """Tensor Gauss over a batch of rectangles with tent weights."""
    if not rects:
        return 0.0
    r = np.asarray(rects)  # (m, 4): lo1, hi1, lo2, hi2
    c1 = (r[:, 0] + r[:, 1])[:, None] / 2.0
    r1 = (r[:, 1] - r[:, 0])[:, None] / 2.0
    c2 = (r[:, 2] + r[:, 3])[:, None] / 2.0
    r2 = (r[:, 3] - r[:, 2])[:, None] / 2.0
    t1 = c1 + r1 * nodes[None, :]
    t2 = c2 + r2 * nodes[None, :]
    k = _k2_np(kind, t1[:, :, None], t2[:, None, :])
    w1 = _tent(o1, h, t1) * weights[None, :]
    w2 = _tent(o2, h, t2) * weights[None, :]
    vals = (k * w1[:, :, None] * w2[:, None, :]).sum(axis=(1, 2))
    return float((vals * r1[:, 0] * r2[:, 0]).sum())


@njit(cache=True)
def _sep_table_2d_jit(kind, h, offsets, nodes, weights):  # pragma: no cover
    m = offsets.shape[0]
    out = np.zeros(m)
    nq = nodes.shape[0]
    for i in range(m):
        o1 = float(offsets[i, 0])
        o2 = float(offsets[i, 1])
        acc = 0.0
        for p1 in range(2):
            lo1 = (o1 - 1.0 + p1) * h
            hi1 = (o1 + p1) * h
            c1 = 0.5 * (lo1 + hi1)
            r1 = 0.5 * (hi1 - lo1)
            for p2 in range(2):
                lo2 = (o2 - 1.0 + p2) * h
                hi2 = (o2 + p2) * h
                c2 = 0.5 * (lo2 + hi2)
                r2 = 0.5 * (hi2 - lo2)
                part = 0.0
                for qa in range(nq):
                    t1 = c1 + r1 * nodes[qa]
                    w1 = (h - abs(t1 - o1 * h)) * weights[qa]
                    row = 0.0
                    for qb in range(nq):
                        t2 = c2 + r2 * nodes[qb]
                        w2 = (h - abs(t2 - o2 * h)) * weights[qb]
                        row += _k2_jit(kind, t1, t2) * w2
                    part += w1 * row
                acc += part * r1 * r2
        out[i] = acc
    return out


def _sep_table_2d_numpy(kind, h, offsets, nodes, weights):
    out = np.zeros(offsets.shape[0])
    for i, (o1, o2) in enumerate(offsets):
        rects = [(l1, h1_, l2, h2_)
                 for (l1, h1_) in _axis_panels(int(o1), h)
                 for (l2, h2_) in _axis_panels(int(o2), h)]
        out[i] = _gauss_rects_numpy(kind, rects, int(o1), int(o2), h,
                                    nodes, weights)
    return out


def _near_interval(o: int, s: float) -> tuple[float, float]:
    if o == 1:
        return (0.0, s)
    if o == -1:
        return (-s, 0.0)
    return (-s, s)


def _split_at_zero(rects, axis_o1, axis_o2):
    """Split rectangles at interior weight kinks (t_i = 0 for o_i = 0)."""
    out = []
    for (l1, h1_, l2, h2_) in rects:
        pieces1 = [(l1, h1_)]
        if axis_o1 == 0 and l1 < 0.0 < h1_:
            pieces1 = [(l1, 0.0), (0.0, h1_)]
        pieces2 = [(l2, h2_)]
        if axis_o2 == 0 and l2 < 0.0 < h2_:
            pieces2 = [(l2, 0.0), (0.0, h2_)]
        for p1 in pieces1:
            for p2 in pieces2:
                out.append((p1[0], p1[1], p2[0], p2[1]))
    return out


def _squarify(rects, max_aspect: float = 1.5):
    """Halve the long axis of each rectangle until aspects are near 1.

    Tensor Gauss rules lose accuracy on high-aspect panels near the
    singularity (the pole sits close to the short axis relative to the long
    one), so the shell pieces are cut to roughly square panels first.
    """
    out = []
    queue = list(rects)
    while queue:
        l1, h1_, l2, h2_ = queue.pop()
        a, b = h1_ - l1, h2_ - l2
        if a > max_aspect * b:
            m = 0.5 * (l1 + h1_)
            queue.append((l1, m, l2, h2_))
            queue.append((m, h1_, l2, h2_))
        elif b > max_aspect * a:
            m = 0.5 * (l2 + h2_)
            queue.append((l1, h1_, l2, m))
            queue.append((l1, h1_, m, h2_))
        else:
            out.append((l1, h1_, l2, h2_))
    return out


def _touch_2d_numpy(kind, h, o1, o2, nodes, weights, tol, max_depth):
    """Touching 2D offsets: far remainder plus square shells toward t = 0."""
    # domain D = prod [(o_i - 1) h, (o_i + 1) h]; near box N = D cap [-h, h]^2
    n1 = _near_interval(o1, h)
    n2 = _near_interval(o2, h)
    far = []
    if o1 == 1:
        far.append((h, 2.0 * h, (o2 - 1.0) * h, (o2 + 1.0) * h))
    elif o1 == -1:
        far.append((-2.0 * h, -h, (o2 - 1.0) * h, (o2 + 1.0) * h))
    if o2 == 1:
        far.append((n1[0], n1[1], h, 2.0 * h))
    elif o2 == -1:
        far.append((n1[0], n1[1], -2.0 * h, -h))
    total = _gauss_rects_numpy(kind, _squarify(_split_at_zero(far, o1, o2)),
                               o1, o2, h, nodes, weights)
    s = h
    for _ in range(max_depth):
        half = s / 2.0
        outer1, outer2 = _near_interval(o1, s), _near_interval(o2, s)
        inner1, inner2 = _near_interval(o1, half), _near_interval(o2, half)
        ring = []
        # axis-1 shell strips (full outer2 range)
        if o1 == 1:
            ring.append((half, s, outer2[0], outer2[1]))
        elif o1 == -1:
            ring.append((-s, -half, outer2[0], outer2[1]))
        else:
            ring.append((half, s, outer2[0], outer2[1]))
            ring.append((-s, -half, outer2[0], outer2[1]))
        # axis-2 shell strips (inner1 range only, avoiding double cover)
        if o2 == 1:
            ring.append((inner1[0], inner1[1], half, s))
        elif o2 == -1:
            ring.append((inner1[0], inner1[1], -s, -half))
        else:
            ring.append((inner1[0], inner1[1], half, s))
            ring.append((inner1[0], inner1[1], -s, -half))
        contrib = _gauss_rects_numpy(kind, _squarify(_split_at_zero(ring, o1, o2)),
                                     o1, o2, h, nodes, weights)
        total += contrib
        if abs(contrib) < tol:
            break
        s = half
    return total


def table_2d(kind: int, h: float, offsets: np.ndarray,
             opts: QuadratureOptions = QuadratureOptions(),
             use_numba: bool | None = None) -> np.ndarray:
    """Cell-pair integrals for 2D integer offsets ((0,0) handled by caller)."""
    use = NUMBA_ENABLED if use_numba is None else use_numba
    offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, 2)
    nodes, weights = opts.nodes()
    maxabs = np.abs(offsets).max(axis=1)
    if np.any(maxabs == 0):
        raise ParameterError("offset (0,0) is a principal-value slot; handled upstream")
    out = np.zeros(offsets.shape[0])
    sep = maxabs >= 2
    if sep.any():
        fn = _sep_table_2d_jit if use else _sep_table_2d_numpy
        out[sep] = fn(kind, float(h), offsets[sep], nodes, weights)
    for i in np.nonzero(maxabs == 1)[0]:
        out[i] = _touch_2d_numpy(kind, float(h), int(offsets[i, 0]),
                                 int(offsets[i, 1]), nodes, weights,
                                 opts.tol, opts.max_depth)
    return out


# ---------------------------------------------------------------------------
# generic entry and refinement oracle


def cell_pair_table(kind: int, n: int, h: float, offsets: np.ndarray,
                    opts: QuadratureOptions = QuadratureOptions(),
                    use_numba: bool | None = None) -> np.ndarray:
    if n == 1:
        return table_1d(kind, h, np.asarray(offsets).reshape(-1), opts, use_numba)
    if n == 2:
        return table_2d(kind, h, offsets, opts, use_numba)
    raise ParameterError("cell-pair tables are shipped for n in {1, 2}")


def refined_cell_table(kind: int, n: int, h: float, offsets: np.ndarray,
                       refine: int,
                       opts: QuadratureOptions = QuadratureOptions()) -> np.ndarray:
    """Oracle: split each cell ``refine``-fold per axis and sum sub-pairs.

    Exact identity W_h(o) = sum_{u,v} W_{h/refine}(refine * o + u - v), so a
    finer-scale run of the same integrator cross-checks the direct one.
    """
    offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, n)
    sub = h / refine
    dvals = np.arange(-(refine - 1), refine, dtype=np.int64)
    counts = refine - np.abs(dvals)
    out = np.zeros(offsets.shape[0])
    for i, o in enumerate(offsets):
        if n == 1:
            subs = refine * o[0] + dvals
            nz = subs != 0
            vals = table_1d(kind, sub, subs[nz], opts, use_numba=False)
            out[i] = float((vals * counts[nz]).sum())
        else:
            d1, d2 = np.meshgrid(dvals, dvals, indexing="ij")
            subs = np.stack([refine * o[0] + d1.ravel(),
                             refine * o[1] + d2.ravel()], axis=-1)
            mult = np.outer(counts, counts).ravel()
            nz = np.abs(subs).max(axis=1) != 0
            vals = table_2d(kind, sub, subs[nz], opts, use_numba=False)
            out[i] = float((vals * mult[nz]).sum())
    return out


__all__ = [
    "KIND_HILBERT", "KIND_RIESZ1_2D", "QuadratureOptions", "kernel_diff",
    "table_1d", "table_2d", "cell_pair_table", "refined_cell_table",
]
