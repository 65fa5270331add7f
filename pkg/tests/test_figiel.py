from fractions import Fraction

import numpy as np
import pytest

from haardyad import figiel, haar
from haardyad import kernel as kmod
from haardyad import lattice as lat
from haardyad.errors import ParameterError, RangeError, ResourceError

HALF = Fraction(1, 2)


def small_setup(seed=11, width=320, levels=4, sup=(128, 192)):
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (width,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, levels, 1), window)
    box = lat.Box((sup[0],), (sup[1],))
    f = haar.random_grid_function(box, levels, seed=seed, stream=1)
    g = haar.random_grid_function(box, levels, seed=seed, stream=2)
    return kern, window, system, f, g


def test_finite_telescoping_identity_exact():
    kern, window, system, f, g = small_setup()
    terms = figiel.decompose(kern, f, g, system, m_max=None, coarse_level=0)
    fw, gw = haar.pad_to(f, window), haar.pad_to(g, window)
    direct = kmod.pairing(gw, kern, fw)
    assert abs(terms.telescoped - direct) <= 1e-10


def test_truncation_gap_shrinks_with_m_max():
    kern, window, system, f, g = small_setup()
    fw, gw = haar.pad_to(f, window), haar.pad_to(g, window)
    direct = kmod.pairing(gw, kern, fw)
    gaps = [abs(figiel.decompose(kern, f, g, system, mm, coarse_level=0).total
                - direct) for mm in (2, 4, 8)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / gaps[2] >= 1.5


def test_paraproducts_negligible_for_antisymmetric_kernel():
    kern, window, system, f, g = small_setup()
    terms = figiel.decompose(kern, f, g, system, m_max=4, coarse_level=0)
    bound = 1e-6 * haar.lp_norm(f, 2) * haar.lp_norm(g, 2)
    assert abs(terms.P) + abs(terms.Q) <= bound
    # the windowed ladder shrinks toward the extrapolated limit
    for _, ladder in terms.p_trend:
        assert ladder[-1] <= ladder[0]


def test_margin_precondition():
    kern, window, system, f, g = small_setup()
    with pytest.raises(ParameterError):
        figiel.decompose(kern, f, g, system, m_max=64, coarse_level=0)


def test_single_haar_input_reduces_to_table_column():
    kern, window, system, f, _ = small_setup()
    # f = one cancellative Haar profile; g a disjoint translate of another
    inner = lat.Box((128,), (192,))
    m = 2
    idx = haar.HaarIndex(lat.DyadicCube(1, (144,)), (1,))
    hf = haar.haar_function(idx, system, inner)
    idx_g = haar.HaarIndex(lat.DyadicCube(1, (144 + m * system.size(1),)), (1,))
    hg = haar.haar_function(idx_g, system, inner)
    terms = figiel.decompose(kern, hf, hg, system, m_max=8, coarse_level=0)
    tables = figiel.level_tables(kern, 1, 8)
    assert abs(terms.A - tables[(m,)][1, 1]) <= 1e-10


def test_good_bad_partition_additivity():
    kern, window, system, f, g = small_setup()
    params = lat.BadnessParams(4, HALF)
    split = figiel.restrict_to_good(kern, f, g, system, params, m_max=4,
                                    coarse_level=0, k_max=4)
    full = figiel.decompose(kern, f, g, system, m_max=4, coarse_level=0)
    assert split.additivity_gap(full) <= 1e-12
    assert split.bad.P == 0.0 and split.bad.boundary == 0.0


def test_all_good_when_badness_depth_starts_beyond_range():
    kern, window, system, f, g = small_setup()
    # r larger than every available ancestor depth never triggers badness:
    # every cube is good and the restricted terms equal the full ones
    params = lat.BadnessParams(4, HALF)
    al = system.aligned_box(0, window)
    masks = figiel.good_masks(system, params, al, range(0, system.j_max),
                              k_max=4)
    forced = {j: np.ones_like(m) for j, m in masks.items()}
    full = figiel.decompose(kern, f, g, system, 4, 0)
    forced_terms = figiel.decompose(kern, f, g, system, 4, 0, masks=forced)
    assert abs(forced_terms.A - full.A) <= 1e-14
    assert abs(forced_terms.B0 - full.B0) <= 1e-14


def test_averaging_identity_three_functionals():
    params = lat.BadnessParams(3, HALF)
    size = 2
    sup = lat.Box((0,), (16,))
    f = haar.random_grid_function(sup, 1, seed=3, stream=5)
    g = haar.random_grid_function(sup, 1, seed=3, stream=6)
    tables = figiel.level_tables(kmod.hilbert_kernel(), 0, 2)

    def phi_level(cube, system):
        s = system.size(cube.level)
        return 1.0 if 0 <= cube.corner[0] and cube.corner[0] + s <= 16 else 0.0

    def phi_a(cube, system):
        trans = lat.DyadicCube(cube.level,
                               (cube.corner[0] + 2 * system.size(cube.level),))
        cg = haar.haar_coeff_of(g, haar.HaarIndex(trans, (1,)), system)
        cf = haar.haar_coeff_of(f, haar.HaarIndex(cube, (1,)), system)
        return float(cg[0] * tables[(2,)][1, 1] * cf[0])

    def phi_b(cube, system):
        trans = lat.DyadicCube(cube.level,
                               (cube.corner[0] + 2 * system.size(cube.level),))
        gt = haar.haar_coeff_of(g, haar.HaarIndex(trans, (0,)), system)
        gi = haar.haar_coeff_of(g, haar.HaarIndex(cube, (0,)), system)
        cf = haar.haar_coeff_of(f, haar.HaarIndex(cube, (1,)), system)
        return float((gt[0] - gi[0]) * tables[(2,)][0, 1] * cf[0])

    for phi in (phi_level, phi_a, phi_b):
        rep = figiel.average_good_identity(phi, params, n=1, level=0,
                                           levels_above=3, levels_below=1,
                                           ref_span=8, k_max=3)
        assert abs(rep["lhs"] - rep["rhs"]) <= 1e-12
        assert rep["pi_good_cube_independent"]
        assert 0.0 < rep["pi_good"] < 1.0


def test_averaging_identity_zero_functional():
    rep = figiel.average_good_identity(lambda cube, system: 0.0,
                                       lat.BadnessParams(3, HALF), n=1,
                                       levels_above=3, levels_below=1)
    assert rep["lhs"] == 0.0 and rep["rhs"] == 0.0


def test_averaging_identity_resource_guard():
    with pytest.raises(ResourceError):
        figiel.average_good_identity(lambda cube, system: 0.0,
                                     lat.BadnessParams(3, HALF), n=1,
                                     levels_above=15, levels_below=15,
                                     max_states=1 << 10)


def test_reconstruction_matches_averaged_totals():
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (160,))
    sup = lat.Box((64,), (96,))
    f = haar.random_grid_function(sup, 3, seed=21)
    g = haar.random_grid_function(sup, 3, seed=22)
    params = lat.BadnessParams(4, HALF)
    rep = figiel.reconstruct_pairing(kern, f, g, window=window, j_max=3,
                                     coarse_level=0, shift_floor=-4,
                                     params=params, m_max=4, k_max=4)
    assert abs(rep["reconstructed"] - rep["averaged_total"]) <= 1e-10
    assert 0.0 < rep["pi_good"] < 1.0


def test_reconstruction_monte_carlo_within_3se():
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (160,))
    sup = lat.Box((64,), (96,))
    f = haar.random_grid_function(sup, 3, seed=21)
    g = haar.random_grid_function(sup, 3, seed=22)
    params = lat.BadnessParams(4, HALF)
    enum = figiel.reconstruct_pairing(kern, f, g, window=window, j_max=3,
                                      coarse_level=0, shift_floor=-4,
                                      params=params, m_max=4, k_max=4)
    mc = figiel.reconstruct_pairing(kern, f, g, window=window, j_max=3,
                                    coarse_level=0, shift_floor=-4,
                                    params=params, m_max=4, k_max=4,
                                    mode="mc", trials=300, seed=5)
    n = mc["samples"]["total"].size
    se_tot = mc["samples"]["total"].std(ddof=1) / np.sqrt(n)
    assert abs(mc["averaged_total"] - enum["averaged_total"]) <= 3 * se_tot
    # delta-method error for the recombined value: mean/pi plus pq terms
    good = mc["samples"]["good"]
    probe = mc["samples"]["good_probe"]
    pqb = mc["samples"]["pqb"]
    pi = probe.mean()
    se = np.sqrt(good.var(ddof=1) / n / pi ** 2
                 + (good.mean() ** 2) * probe.var(ddof=1) / n / pi ** 4
                 + pqb.var(ddof=1) / n)
    assert abs(mc["reconstructed"] - enum["reconstructed"]) <= 3 * se


def test_disjoint_far_supports_reduce_to_boundary():
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (640,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    f = haar.random_grid_function(lat.Box((128, ), (160,)), 4, seed=1)
    g = haar.random_grid_function(lat.Box((480,), (512,)), 4, seed=2)
    # supports are separated by more than m_max * coarse size, so every
    # cancellative translate sum vanishes and the boundary carries the value
    terms = figiel.decompose(kern, f, g, system, m_max=8, coarse_level=0)
    assert abs(terms.A) + abs(terms.B0) + abs(terms.C0) <= 1e-14
    fw, gw = haar.pad_to(f, window), haar.pad_to(g, window)
    direct = kmod.pairing(gw, kern, fw)
    assert abs(terms.total - direct) <= 0.02 * abs(direct)


def test_apply_operator_consistent_with_decompose():
    kern, window, system, f, g = small_setup()
    tf = figiel.apply_dyadic_operator(kern, f, system, m_max=8, coarse_level=0)
    terms = figiel.decompose(kern, f, g, system, m_max=8, coarse_level=0)
    gw = haar.pad_to(g, window)
    assert abs(haar.inner_product(gw, tf) - terms.telescoped) <= 1e-12


def test_apply_operator_l2_norm_bounded():
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (44 * 16,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-2, 4, 1), window)
    sup = lat.Box((16 * 16,), (28 * 16,))
    worst = 0.0
    for s in range(4):
        f = haar.random_grid_function(sup, 4, seed=60 + s)
        tf = figiel.apply_dyadic_operator(kern, f, system, m_max=16,
                                          coarse_level=0)
        worst = max(worst, haar.lp_norm(tf, 2) / haar.lp_norm(f, 2))
    assert worst <= 1.05


def test_reconstruct_shift_floor_guard():
    kern = kmod.hilbert_kernel()
    window = lat.Box((0,), (160,))
    f = haar.random_grid_function(lat.Box((64,), (96,)), 3, seed=1)
    with pytest.raises(RangeError):
        figiel.reconstruct_pairing(kern, f, f, window=window, j_max=3,
                                   coarse_level=0, shift_floor=-2,
                                   params=lat.BadnessParams(4, HALF),
                                   m_max=4, k_max=4)


def test_finite_telescoping_identity_2d():
    kern = kmod.riesz2d_kernel()
    window = lat.Box((0, 0), (16, 16))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-2, 2, 2), window)
    sup = lat.Box((4, 4), (12, 12))
    f = haar.random_grid_function(sup, 2, seed=1)
    g = haar.random_grid_function(sup, 2, seed=2)
    terms = figiel.decompose(kern, f, g, system, m_max=None, coarse_level=0)
    fw, gw = haar.pad_to(f, window), haar.pad_to(g, window)
    direct = kmod.pairing(gw, kern, fw)
    assert abs(terms.telescoped - direct) <= 1e-10
