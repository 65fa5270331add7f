"""Telescoping dyadic decomposition of <g, Tf> and good-cube averaging.

For a fixed dyadic system the pairing telescopes over levels into a
cancellative part A (both sides oscillating), mixed parts B and C (one side
an averaging profile), and a coarse boundary term. Rewriting the averaging
side against the difference h0_{I+m} - h0_I splits B into B0 plus the
paraproduct P carried by <T*1, h^theta_I>, and dually C into C0 plus Q.
Translate sums are truncated at |m|_oo <= m_max (or run the full in-window
range for the exact finite telescoping); the paraproduct coefficients are
computed over an expanding-window ladder and Richardson-extrapolated, which
drives them to zero for the shipped antisymmetric kernels.

Good-cube restriction and the exact averaging identity over enumerated
shift states use a uniform badness depth cap so that one pi_good factors
out of every level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RangeError, ResourceError
from .haar import GridFunction, analyze, pad_to, project, restrict_to, thetas
from .kernel import CZKernel, haar_coeff_block, pairing
from .lattice import (BadnessParams, Box, DyadicCube, DyadicSystem,
                      ShiftParameter, count_shift_states, is_bad,
                      iter_shift_states, sample_beta, shift_cube)
from .quadrature import QuadratureOptions

DEFAULT_LADDERS = {1: (32, 64, 128), 2: (8, 16, 32)}


# ---------------------------------------------------------------------------
# assembly helpers


def _shift_slices(shape, m):
    """Index slices realizing target[idx + m] <- source[idx]."""
    sl_t, sl_s = [], []
    for i, mi in enumerate(m):
        s = shape[i]
        if abs(mi) >= s:
            return None, None
        sl_t.append(slice(max(0, mi), s + min(0, mi)))
        sl_s.append(slice(max(0, -mi), s - max(0, mi)))
    return tuple(sl_t), tuple(sl_s)


def _shifted_dot(a: np.ndarray, b: np.ndarray, m) -> float:
    """sum over idx of a[idx + m] * b[idx], trailing dims contracted."""
    sl_a, sl_b = _shift_slices(a.shape[:len(m)], m)
    if sl_a is None:
        return 0.0
    return float(np.sum(a[sl_a] * b[sl_b]))


def _shifted_add(target: np.ndarray, source: np.ndarray, m, c: float):
    """target[idx + m] += c * source[idx]."""
    sl_t, sl_s = _shift_slices(target.shape[:len(m)], m)
    if sl_t is not None:
        target[sl_t] += c * source[sl_s]


def _shifted_gather(target: np.ndarray, source: np.ndarray, m, c: float):
    """target[idx] += c * source[idx + m]."""
    _shifted_add(target, source, tuple(-v for v in m), c)


def _iter_ms(n: int, m_max: int):
    rng = range(-m_max, m_max + 1)
    return list(itertools.product(*([rng] * n)))


def level_tables(kernel: CZKernel, level: int, m_max: int,
                 opts: QuadratureOptions = QuadratureOptions()) -> dict:
    """Coefficient matrices <h^eta_{I+m}, T h^theta_I> for |m|_oo <= m_max.

    Position-independent for convolution kernels, so one table serves every
    cube of the level; results are memoized on the kernel.
    """
    key = ("level_tables", level, m_max, opts.order, opts.tol)
    if key in kernel._memo:
        return kernel._memo[key]
    ms = _iter_ms(kernel.n, m_max)
    block = haar_coeff_block(kernel, level, ms, opts)
    block[:, 0, 0] = 0.0  # not a Haar coefficient slot
    out = {m: block[i] for i, m in enumerate(ms)}
    kernel._memo[key] = out
    return out


def paraproduct_coefficients(kernel: CZKernel, level: int,
                             ladder=None,
                             opts: QuadratureOptions = QuadratureOptions()):
    """Windowed <T*1, h^theta_I> and <T1, h^eta_I> with extrapolated limits.

    The windowed value at radius R is |I|^{1/2} sum_{|m|_oo <= R} of the
    matching coefficient column; three-point Richardson on the (R, 2R, 4R)
    ladder removes the 1/R and 1/R^2 window-boundary terms exactly.
    Returns (p_limit, q_limit, p_ladder, q_ladder), arrays over theta.
    """
    if ladder is None:
        ladder = DEFAULT_LADDERS[kernel.n]
    key = ("paraproduct", level, tuple(ladder), opts.order, opts.tol)
    if key in kernel._memo:
        return kernel._memo[key]
    n = kernel.n
    pats = thetas(n)
    scale = 2.0 ** (-level * n / 2.0)
    psum = np.zeros(len(pats))
    qsum = np.zeros(len(pats))
    p_vals, q_vals = [], []
    ladder = sorted(ladder)
    done = 0
    for r_target in ladder:
        shell = [m for m in _iter_ms(n, r_target)
                 if done == 0 or max(abs(v) for v in m) > done]
        block = haar_coeff_block(kernel, level, shell, opts)
        # row 0 holds <h0_{I+m}, T h^theta_I>; column 0 its adjoint side
        psum += block[:, 0, 1:].sum(axis=0)
        neg = [tuple(-v for v in m) for m in shell]
        block_neg = haar_coeff_block(kernel, level, neg, opts)
        qsum += block_neg[:, 1:, 0].sum(axis=0)
        done = r_target
        p_vals.append(scale * psum.copy())
        q_vals.append(scale * qsum.copy())
    if len(ladder) >= 3 and 2 * ladder[-3] == ladder[-2] \
            and 2 * ladder[-2] == ladder[-1]:
        p_lim = (8.0 * p_vals[-1] - 6.0 * p_vals[-2] + p_vals[-3]) / 3.0
        q_lim = (8.0 * q_vals[-1] - 6.0 * q_vals[-2] + q_vals[-3]) / 3.0
    else:
        p_lim, q_lim = p_vals[-1], q_vals[-1]
    result = (p_lim, q_lim, p_vals, q_vals)
    kernel._memo[key] = result
    return result


def good_masks(system: DyadicSystem, params: BadnessParams, al: Box,
               levels, k_max: int | None = None) -> dict[int, np.ndarray]:
    """Boolean goodness per cube of the aligned grid, per level."""
    masks = {}
    for j in levels:
        s = system.size(j)
        shape = tuple(e // s for e in al.extent)
        mask = np.zeros(shape, dtype=bool)
        for idx in itertools.product(*[range(k) for k in shape]):
            corner = tuple(int(al.lo[i] + idx[i] * s) for i in range(al.n))
            mask[idx] = not is_bad(DyadicCube(j, corner), params, system, k_max)
        masks[j] = mask
    return masks


@dataclass(eq=False)
class DecompositionTerms:
    """Values of the truncated telescoping split; total = sum of the parts."""

    A: float
    B0: float
    C0: float
    P: float
    Q: float
    boundary: float
    m_max: int | None
    raw_B: float = 0.0
    raw_C: float = 0.0
    by_level: dict = field(default_factory=dict)
    by_m: dict = field(default_factory=dict)
    p_trend: list = field(default_factory=list)
    q_trend: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.A + self.B0 + self.C0 + self.P + self.Q + self.boundary

    @property
    def cancellative(self) -> float:
        return self.A + self.B0 + self.C0

    @property
    def telescoped(self) -> float:
        """A + raw B + raw C + boundary (no paraproduct rewriting)."""
        return self.A + self.raw_B + self.raw_C + self.boundary


def _check_margins(f: GridFunction, window: Box, margin: int):
    for i in range(window.n):
        if (f.box.lo[i] - window.lo[i] < margin
                or window.hi[i] - f.box.hi[i] < margin):
            raise ParameterError(
                "support too close to the window edge for this m_max")


def decompose(kernel: CZKernel, f: GridFunction, g: GridFunction,
              system: DyadicSystem, m_max: int | None,
              coarse_level: int | None = None,
              opts: QuadratureOptions = QuadratureOptions(),
              masks: dict[int, np.ndarray] | None = None,
              ladder=None) -> DecompositionTerms:
    """Assemble A, B0, C0, P, Q, raw B/C, and the coarse boundary term.

    ``m_max = None`` runs the full per-level translate range of the analysis
    box (the exact finite telescoping). ``masks`` restricts the base-cube
    sums of A, B0, C0 and raw B/C; P, Q and the boundary stay unrestricted.
    """
    if not kernel.convolution:
        raise ParameterError("decompose requires a shipped convolution kernel")
    n = system.n
    j0 = system.j_min if coarse_level is None else coarse_level
    if m_max is not None:
        margin = m_max * system.size(j0)
        _check_margins(f, system.window, margin)
        _check_margins(g, system.window, margin)
    cf = analyze(f, system, box=system.window, coarse_level=j0)
    cg = analyze(g, system, box=system.window, coarse_level=j0)
    al = cf.box
    terms = DecompositionTerms(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, m_max)
    npat = 2 ** n - 1
    for j in range(j0, system.j_max):
        shape = tuple(e // system.size(j) for e in al.extent)
        local_mmax = m_max if m_max is not None else max(shape) - 1
        tables = level_tables(kernel, j, local_mmax, opts)
        fdet = cf.details[j]          # (spatial..., d, 2^n - 1)
        gdet = cg.details[j]
        scale0 = 2.0 ** (j * n / 2.0)
        f0 = cf.cube_integrals[j] * scale0   # <h0_I, f>
        g0 = cg.cube_integrals[j] * scale0
        if masks is not None:
            mk = masks[j][..., None, None]
            fdet_b = fdet * mk
            gdet_b = gdet * mk
        else:
            fdet_b, gdet_b = fdet, gdet
        a_j = b0_j = c0_j = braw_j = craw_j = 0.0
        for m, mat in tables.items():
            contrib = 0.0
            for a in range(npat):
                for b in range(npat):
                    c = mat[a + 1, b + 1]
                    if c != 0.0:
                        contrib += c * _shifted_dot(gdet[..., a], fdet_b[..., b], m)
            b_m = braw_m = 0.0
            for b in range(npat):
                c = mat[0, b + 1]
                if c != 0.0:
                    sdot = _shifted_dot(g0, fdet_b[..., b], m)
                    pdot = float(np.sum(g0 * fdet_b[..., b]))
                    braw_m += c * sdot
                    b_m += c * (sdot - pdot)
            neg = tuple(-v for v in m)
            c_m = craw_m = 0.0
            for a in range(npat):
                c = tables[neg][a + 1, 0]
                if c != 0.0:
                    sdot = _shifted_dot(f0, gdet_b[..., a], m)
                    pdot = float(np.sum(f0 * gdet_b[..., a]))
                    craw_m += c * sdot
                    c_m += c * (sdot - pdot)
            a_j += contrib
            b0_j += b_m
            c0_j += c_m
            braw_j += braw_m
            craw_j += craw_m
            key = m if n > 1 else m[0]
            terms.by_m[key] = terms.by_m.get(key, 0.0) + contrib + b_m + c_m
        p_lim, q_lim, p_tr, q_tr = paraproduct_coefficients(
            kernel, j, ladder, opts)
        avg_g = cg.cube_integrals[j] * 2.0 ** (j * n)   # <g>_I
        avg_f = cf.cube_integrals[j] * 2.0 ** (j * n)
        p_j = sum(float(p_lim[t]) * float(np.sum(avg_g * fdet[..., t]))
                  for t in range(npat))
        q_j = sum(float(q_lim[t]) * float(np.sum(avg_f * gdet[..., t]))
                  for t in range(npat))
        terms.p_trend.append((j, [float(np.abs(v).max()) for v in p_tr]))
        terms.q_trend.append((j, [float(np.abs(v).max()) for v in q_tr]))
        terms.A += a_j
        terms.B0 += b0_j
        terms.C0 += c0_j
        terms.raw_B += braw_j
        terms.raw_C += craw_j
        terms.P += p_j
        terms.Q += q_j
        terms.by_level[j] = {"A": a_j, "B0": b0_j, "C0": c0_j,
                             "raw_B": braw_j, "raw_C": craw_j,
                             "P": p_j, "Q": q_j}
    wbox = system.window
    fw, gw = pad_to(f, wbox), pad_to(g, wbox)
    terms.boundary = pairing(project(gw, j0, system), kernel,
                             project(fw, j0, system), opts)
    return terms


@dataclass(frozen=True)
class GoodBadSplit:
    good: DecompositionTerms
    bad: DecompositionTerms
    pi_good_by_level: dict

    def additivity_gap(self, full: DecompositionTerms) -> float:
        """Max deviation of good + bad from the unrestricted A, B0, C0."""
        return max(abs(self.good.A + self.bad.A - full.A),
                   abs(self.good.B0 + self.bad.B0 - full.B0),
                   abs(self.good.C0 + self.bad.C0 - full.C0))


def restrict_to_good(kernel: CZKernel, f: GridFunction, g: GridFunction,
                     system: DyadicSystem, params: BadnessParams,
                     m_max: int | None, coarse_level: int | None = None,
                     k_max: int | None = None,
                     opts: QuadratureOptions = QuadratureOptions()) -> GoodBadSplit:
    """Split the cancellative sums into good-cube and bad-cube parts.

    The paraproducts and the boundary term are not base-cube sums of the
    same shape; they stay on the good side unrestricted (and are zeroed on
    the bad side).
    """
    j0 = system.j_min if coarse_level is None else coarse_level
    al = system.aligned_box(j0, system.window)
    levels = range(j0, system.j_max)
    masks = good_masks(system, params, al, levels, k_max)
    good = decompose(kernel, f, g, system, m_max, coarse_level, opts, masks)
    inv = {j: ~m for j, m in masks.items()}
    bad = decompose(kernel, f, g, system, m_max, coarse_level, opts, inv)
    bad.P = bad.Q = bad.boundary = 0.0
    pg = {j: float(mask.mean()) for j, mask in masks.items()}
    return GoodBadSplit(good, bad, pg)


# ---------------------------------------------------------------------------
# exact averaging over enumerated shift states


def average_good_identity(phi, params: BadnessParams, *, n: int = 1,
                          level: int = 0, levels_above: int = 2,
                          levels_below: int = 2, ref_span: int = 8,
                          k_max: int | None = None,
                          max_states: int = 1 << 20) -> dict:
    """Exact check of pi_good * E sum_all phi = E sum_good phi.

    ``phi(cube, system) -> float`` is any per-cube functional of the shifted
    cube's geometry. Reference cubes run over ``ref_span`` positions per
    axis at the given level of the standard grid; the enumeration covers all
    shift states of ``levels_above`` levels above (driving goodness) and
    ``levels_below`` below (driving position).
    """
    if levels_above < params.r:
        raise RangeError("levels_above must be at least r")
    cap = k_max if k_max is not None else levels_above
    if cap > levels_above:
        raise RangeError("k_max cannot exceed the enumerated depth")
    j_min, j_max = level - levels_above, level + levels_below
    states = count_shift_states(j_min, j_max, n)
    if states > max_states:
        raise ResourceError(
            f"enumeration needs {states} shift states (limit {max_states})",
            required=states)
    size = 1 << (j_max - level)
    span = (ref_span + 2) * size * (1 << levels_above)
    window = Box((-span,) * n, (span,) * n)
    refs = [DyadicCube(level, tuple(int(size * v) for v in idx))
            for idx in itertools.product(range(ref_span), repeat=n)]
    sum_all = 0.0
    sum_good = 0.0
    good_counts = {ref: 0 for ref in refs}
    for beta in iter_shift_states(j_min, j_max, n, max_states):
        system = DyadicSystem(beta, window)
        for ref in refs:
            cube = shift_cube(ref, beta)
            v = phi(cube, system)
            good = not is_bad(cube, params, system, cap)
            sum_all += v
            if good:
                sum_good += v
                good_counts[ref] += 1
    counts = set(good_counts.values())
    pi_good = next(iter(counts)) / states if len(counts) == 1 else \
        sum(good_counts.values()) / (states * len(refs))
    return {
        "lhs": pi_good * sum_all / states,
        "rhs": sum_good / states,
        "pi_good": pi_good,
        "pi_good_cube_independent": len(counts) == 1,
        "states": states,
    }


def reconstruct_pairing(kernel: CZKernel, f: GridFunction, g: GridFunction,
                        *, window: Box, j_max: int, coarse_level: int,
                        shift_floor: int, params: BadnessParams,
                        m_max: int, k_max: int,
                        mode: str = "enumerate", trials: int = 0,
                        seed: int = 0,
                        opts: QuadratureOptions = QuadratureOptions(),
                        max_states: int = 1 << 12) -> dict:
    """Average the good-restricted split over random systems and recombine.

    The recombination (1/pi_good) E[A_g + B0_g + C0_g] + E[P + Q + boundary]
    is compared against the plain averaged totals and the direct quadrature
    pairing. ``k_max`` caps the badness depth so pi_good is level-uniform;
    ``shift_floor <= coarse_level - k_max`` keeps every analysis level's
    goodness window fully enumerated.
    """
    if coarse_level - k_max < shift_floor:
        raise RangeError("shift_floor too shallow for the badness depth cap")
    if k_max < params.r:
        raise ParameterError("k_max must be at least r")
    n = window.n
    samples = {"good": [], "pqb": [], "total": [], "good_probe": []}

    def one_state(beta: ShiftParameter):
        system = DyadicSystem(beta, window)
        split = restrict_to_good(kernel, f, g, system, params, m_max,
                                 coarse_level, k_max, opts)
        samples["good"].append(split.good.cancellative)
        samples["pqb"].append(split.good.P + split.good.Q + split.good.boundary)
        samples["total"].append(
            split.good.cancellative + split.bad.cancellative
            + split.good.P + split.good.Q + split.good.boundary)
        probe = system.containing_cube(system.j_max, window.lo)
        samples["good_probe"].append(
            0.0 + (not is_bad(probe, params, system, k_max)))

    if mode == "enumerate":
        states = count_shift_states(shift_floor, j_max, n)
        if states > max_states:
            raise ResourceError(
                f"enumeration needs {states} shift states (limit {max_states})",
                required=states)
        for beta in iter_shift_states(shift_floor, j_max, n, max_states):
            one_state(beta)
    elif mode == "mc":
        if trials < 1:
            raise ParameterError("mc mode needs trials >= 1")
        for t in range(trials):
            one_state(sample_beta(seed, shift_floor, j_max, n, stream=t))
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    arrays = {k: np.asarray(v) for k, v in samples.items()}
    count = arrays["good"].size
    pi_good = float(arrays["good_probe"].mean())
    if pi_good == 0.0:
        raise ParameterError("no good cubes at this badness depth")
    reconstructed = float(arrays["good"].mean()) / pi_good \
        + float(arrays["pqb"].mean())
    fw, gw = pad_to(f, window), pad_to(g, window)
    return {
        "reconstructed": reconstructed,
        "averaged_total": float(arrays["total"].mean()),
        "direct": pairing(gw, kernel, fw, opts),
        "pi_good": pi_good,
        "states": count,
        "samples": arrays,
    }


# ---------------------------------------------------------------------------
# the reconstructed operator, as a function on the window


def _paint_blocks(out_vals: np.ndarray, coeffs: np.ndarray, s: int,
                  theta: tuple[int, ...] | None, mag: float):
    """Add sum_I coeffs[I] * (Haar profile on I) over an aligned level grid.

    ``theta = None`` paints the averaging profile; otherwise the tensor sign
    pattern is applied on the cell axes. ``coeffs`` has shape grid + (d,).
    """
    n = coeffs.ndim - 1
    d = coeffs.shape[-1]
    shape = []
    for e in out_vals.shape[:-1]:
        shape.extend([e // s, s])
    shape.append(d)
    view = out_vals.reshape(shape)
    arr = coeffs * mag
    for i in range(n):
        arr = np.expand_dims(arr, 2 * i + 1)
    target_shape = tuple(shape)
    block = np.broadcast_to(arr, target_shape)
    if theta is None or not any(theta):
        view += block
        return
    block = block.copy()
    half = s // 2
    for i, bit in enumerate(theta):
        if bit == 1:
            sl = [slice(None)] * block.ndim
            sl[2 * i + 1] = slice(half, None)
            block[tuple(sl)] *= -1.0
    view += block


def apply_dyadic_operator(kernel: CZKernel, f: GridFunction,
                          system: DyadicSystem, m_max: int,
                          coarse_level: int | None = None,
                          opts: QuadratureOptions = QuadratureOptions()) -> GridFunction:
    """Apply the truncated telescoping representation of T to f.

    Output = sum_j [A_j + B_j + C_j](f) + E_c T E_c f with the raw B and C
    parts (no paraproduct rewriting), all translate sums truncated at
    |m|_oo <= m_max. The result lives on the system window.
    """
    if not kernel.convolution:
        raise ParameterError("operator assembly requires a convolution kernel")
    n = system.n
    j0 = system.j_min if coarse_level is None else coarse_level
    margin = m_max * system.size(j0)
    _check_margins(f, system.window, margin)
    cf = analyze(f, system, box=system.window, coarse_level=j0)
    al = cf.box
    d = f.d
    npat = 2 ** n - 1
    pats = thetas(n)
    out_vals = np.zeros(al.extent + (d,))
    for j in range(j0, system.j_max):
        shape = tuple(e // system.size(j) for e in al.extent)
        tables = level_tables(kernel, j, m_max, opts)
        fdet = cf.details[j]
        f0 = cf.cube_integrals[j] * 2.0 ** (j * n / 2.0)
        out_det = np.zeros(shape + (d, npat))
        b_coef = np.zeros(shape + (d,))
        for m, mat in tables.items():
            for a in range(npat):
                # A: output detail at I + m collects the f-details at I
                for b in range(npat):
                    c = mat[a + 1, b + 1]
                    if c != 0.0:
                        _shifted_add(out_det[..., a], fdet[..., b], m, c)
                # C: output detail at J collects <h0, f> at J + m
                c = tables[tuple(-v for v in m)][a + 1, 0]
                if c != 0.0:
                    _shifted_gather(out_det[..., a], f0, m, c)
            # B: averaging block at I + m weighted by the f-details at I
            coefs = np.zeros(shape + (d,))
            for b in range(npat):
                c = mat[0, b + 1]
                if c != 0.0:
                    coefs += c * fdet[..., b]
            _shifted_add(b_coef, coefs, m, 1.0)
        s = system.size(j)
        mag = 2.0 ** (j * n / 2.0)
        for t, th in enumerate(pats):
            _paint_blocks(out_vals, out_det[..., t], s, th, mag)
        _paint_blocks(out_vals, b_coef, s, None, mag)

    # boundary: E_c T E_c f, painted as coarse averaging blocks
    s0 = system.size(j0)
    shape0 = tuple(e // s0 for e in al.extent)
    avg = cf.cube_integrals[j0] * 2.0 ** (j0 * n)   # coarse averages of f
    grids = [np.arange(-(e - 1), e, dtype=np.int64) for e in shape0]
    if n == 1:
        offs = grids[0][:, None]
        w0 = kernel.cell_table(j0, offs, opts)
        vals = np.stack([np.convolve(avg[:, c], w0)[shape0[0] - 1:
                                                    2 * shape0[0] - 1]
                         for c in range(d)], axis=-1)
    else:
        o0, o1 = np.meshgrid(grids[0], grids[1], indexing="ij")
        offs = np.stack([o0.ravel(), o1.ravel()], axis=-1)
        w0 = kernel.cell_table(j0, offs, opts).reshape(len(grids[0]),
                                                       len(grids[1]))
        from numpy.fft import irfftn, rfftn
        full = tuple(3 * e - 2 for e in shape0)
        vals = np.zeros(shape0 + (d,))
        for c in range(d):
            spec = rfftn(w0, full, axes=(0, 1)) \
                * rfftn(avg[..., c], full, axes=(0, 1))
            conv = irfftn(spec, full, axes=(0, 1))
            vals[..., c] = conv[shape0[0] - 1: 2 * shape0[0] - 1,
                                shape0[1] - 1: 2 * shape0[1] - 1]
    cell_values = vals * 2.0 ** (j0 * n)  # value of E_c(T E_c f) on the cube
    _paint_blocks(out_vals, cell_values, s0, None, 1.0)
    return restrict_to(GridFunction(al, system.j_max, out_vals), system.window)


__all__ = [
    "DecompositionTerms", "GoodBadSplit", "decompose", "restrict_to_good",
    "average_good_identity", "reconstruct_pairing", "apply_dyadic_operator",
    "level_tables", "paraproduct_coefficients", "good_masks",
]
