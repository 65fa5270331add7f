import math
from fractions import Fraction

import numpy as np
import pytest

from haardyad import lattice as lat
from haardyad.errors import ParameterError, RangeError


HALF = Fraction(1, 2)


def test_sample_beta_deterministic():
    a = lat.sample_beta(1234, 0, 20, 1)
    b = lat.sample_beta(1234, 0, 20, 1)
    assert np.array_equal(a.bits, b.bits)
    c = lat.sample_beta(1235, 0, 20, 1)
    assert not np.array_equal(a.bits, c.bits)


def test_bit_frequencies_unbiased():
    freq = lat.bit_frequencies(100_000, levels=20, n=1)
    se = math.sqrt(0.25 / 100_000)
    assert np.all(np.abs(freq - 0.5) <= 3 * se)


def test_zero_shift_reproduces_standard_grid():
    beta = lat.ShiftParameter.zero(0, 6, 2)
    for j in range(0, 7):
        assert np.all(beta.offset(j) == 0)


def test_shift_cube_single_term():
    # I = [0,1) at level 0, beta_1 = 1, finest level 1: corner moves by 1 unit
    beta = lat.ShiftParameter(0, 1, np.array([[1]], dtype=np.uint8))
    out = lat.shift_cube(lat.DyadicCube(0, (0,)), beta)
    assert out.corner == (1,)  # [1/2, 3/2) in units of 2^-1


def test_shift_cube_zero_identity():
    beta = lat.ShiftParameter.zero(0, 5, 1)
    cube = lat.DyadicCube(2, (8,))
    assert lat.shift_cube(cube, beta) == cube


def test_shift_cube_missing_levels():
    beta = lat.ShiftParameter.zero(2, 5, 1)
    with pytest.raises(ParameterError):
        lat.shift_cube(lat.DyadicCube(0, (0,)), beta)


def test_nesting_preserved_under_shift_full_enumeration():
    # every nested pair I subset J in the standard grid stays nested, all
    # 2^4 shift states of 4 levels
    window = lat.Box((-64,), (64,))
    for beta in lat.iter_shift_states(0, 4, 1):
        system = lat.DyadicSystem(beta, window)
        for j_level in (0, 1, 2):
            for corner in range(0, 16, 16 >> j_level):
                parent = lat.DyadicCube(j_level, (corner,))
                size_child = 16 >> (j_level + 1)
                child = lat.DyadicCube(j_level + 1, (corner + size_child,))
                sp = lat.shift_cube(parent, beta)
                sc = lat.shift_cube(child, beta)
                assert system.cube_box(sp).contains_box(system.cube_box(sc))


def test_ancestor_identity_and_containment():
    window = lat.Box((-4096,), (4096,))
    beta = lat.sample_beta(7, -6, 6, 1)
    system = lat.DyadicSystem(beta, window)
    cube = system.containing_cube(6, (137,))
    assert lat.ancestor(cube, 0, system) == cube
    for k in range(1, 12):
        anc = lat.ancestor(cube, k, system)
        assert system.cube_box(anc).contains_box(system.cube_box(cube))
    with pytest.raises(RangeError):
        lat.ancestor(cube, 13, system)


def test_ancestor_standard_example():
    window = lat.Box((0,), (4,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(0, 2, 1), window)
    child = lat.DyadicCube(1, (0,))  # [0, 1/2)
    assert lat.ancestor(child, 1, system) == lat.DyadicCube(0, (0,))


def test_dist_to_complement_examples():
    window = lat.Box((0,), (16,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(0, 4, 1), window)
    # I = [1/4, 1/2) inside J = [0, 1): distance 1/4 = 4 units of 2^-4
    inner = lat.DyadicCube(2, (4,))
    outer = lat.DyadicCube(0, (0,))
    assert lat.dist_to_complement(inner, outer, system) == 4
    touching = lat.DyadicCube(2, (0,))
    assert lat.dist_to_complement(touching, outer, system) == 0
    with pytest.raises(ParameterError):
        lat.dist_to_complement(lat.DyadicCube(2, (20,)), outer, system)


def test_dist_matches_float_oracle():
    rng = np.random.default_rng(5)
    window = lat.Box((-4096, -4096), (4096, 4096))
    beta = lat.sample_beta(3, -5, 5, 2)
    system = lat.DyadicSystem(beta, window)
    for _ in range(200):
        point = tuple(int(v) for v in rng.integers(-1000, 1000, size=2))
        j = int(rng.integers(1, 4))
        k = int(rng.integers(1, 6 - j))
        inner = system.containing_cube(j + k, point)
        outer = lat.ancestor(inner, k, system)
        exact = lat.dist_to_complement(inner, outer, system)
        # float oracle: min over axes of min gap, in continuous units
        si, so = system.size(inner.level), system.size(outer.level)
        unit = 2.0 ** (-system.j_max)
        gaps = []
        for i in range(2):
            gaps.append(min((inner.corner[i] - outer.corner[i]) * unit,
                            (outer.corner[i] + so - inner.corner[i] - si) * unit))
        assert abs(exact * unit - min(gaps)) < 1e-12


def test_is_bad_touching_boundary():
    window = lat.Box((-4096,), (4096,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-8, 0, 1), window)
    params = lat.BadnessParams(4, HALF)
    # corner cube touches every ancestor boundary
    assert lat.is_bad(lat.DyadicCube(0, (0,)), params, system)


def test_is_bad_small_r_example():
    # gamma = 1/2, r = 1: [0, 1/4) touches [0,1)^c at distance 0
    window = lat.Box((0,), (16,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(0, 4, 1), window)
    params = lat.BadnessParams(1, HALF)
    assert lat.is_bad(lat.DyadicCube(2, (0,)), params, system)


def test_good_cube_exists_by_exhaustive_scan():
    window = lat.Box((-4096,), (4096,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-6, 0, 1), window)
    params = lat.BadnessParams(4, HALF)
    cubes = [lat.DyadicCube(0, (c,)) for c in range(-32, 32)]
    verdicts = [lat.is_bad(c, params, system, k_max=6) for c in cubes]
    assert any(verdicts) and not all(verdicts)


def test_is_bad_requires_ancestors():
    window = lat.Box((0,), (16,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(0, 4, 1), window)
    params = lat.BadnessParams(4, HALF)
    with pytest.raises(RangeError):
        lat.is_bad(lat.DyadicCube(2, (0,)), params, system)


def test_pi_bad_bound_values():
    params = lat.BadnessParams(16, HALF)
    val = lat.pi_bad_bound(1, params)
    # 4 * 2^-8 / (1 - 2^-1/2)
    assert abs(val - 4 * 2 ** -8 / (1 - 2 ** -0.5)) < 1e-15
    assert abs(val - 0.0534) < 1e-4
    # r -> r + 2 halves the bound at gamma = 1/2
    val2 = lat.pi_bad_bound(1, lat.BadnessParams(18, HALF))
    assert abs(val2 - val / 2) < 1e-15
    # n = 2 doubles
    assert abs(lat.pi_bad_bound(2, params) - 2 * val) < 1e-15


def test_default_r():
    r = lat.default_r(1, HALF)
    assert lat.pi_bad_bound(1, lat.BadnessParams(r, HALF)) < 0.5
    assert lat.pi_bad_bound(1, lat.BadnessParams(r - 1, HALF)) >= 0.5


def test_estimate_single_trial_degenerate():
    out = lat.estimate_pi_bad(1, lat.BadnessParams(8, HALF), 1, seed=9)
    assert out.estimate.mean in (0.0, 1.0)


def test_estimate_matches_bound():
    for n, r in ((1, 8), (2, 16)):
        out = lat.estimate_pi_bad(n, lat.BadnessParams(r, HALF), 20_000, seed=4)
        assert out.passes_bound
        assert out.tail_bound < 1e-3


def test_probability_estimate_fields():
    est = lat.ProbabilityEstimate(0.25, 400)
    assert abs(est.standard_error - math.sqrt(0.25 * 0.75 / 400)) < 1e-15
    assert est.complement.mean == 0.75
    with pytest.raises(ParameterError):
        lat.ProbabilityEstimate(1.5, 10)


def test_badness_kernel_paths_agree():
    params = lat.BadnessParams(3, Fraction(2, 3))
    depth = 9
    th = lat.badness_thresholds(params, depth)
    bits = lat.shift_bits(77, np.arange(500), depth).reshape(500, depth, 1)
    a = lat.badness_flags(bits, params.r, th, use_numba=False)
    b = lat.badness_flags(bits, params.r, th, use_numba=True)
    assert np.array_equal(a, b)


def test_badness_kernel_matches_scalar_is_bad():
    params = lat.BadnessParams(2, HALF)
    depth = 7
    th = lat.badness_thresholds(params, depth)
    bits = lat.shift_bits(123, np.arange(100), depth).reshape(100, depth, 1)
    flags = lat.badness_flags(bits, params.r, th, use_numba=False)
    window = lat.Box((-(1 << depth),), (1 << depth,))
    for t in range(100):
        beta = lat.ShiftParameter(-depth, 0, bits[t][::-1])
        system = lat.DyadicSystem(beta, window)
        assert lat.is_bad(lat.DyadicCube(0, (0,)), params, system) == bool(flags[t])


def test_int_root_exact():
    for b in (2, 3, 5):
        for x in (0, 1, 7, 2 ** 40, 3 ** 30, 2 ** 60 - 1):
            r = lat._int_root(x, b)
            assert r ** b <= x < (r + 1) ** b


def test_independence_exact_enumeration():
    rep = lat.badness_position_independence(lat.BadnessParams(4, HALF),
                                            coarse_levels=4, fine_levels=2)
    assert rep["states"] == 64
    assert rep["max_deviation"] <= 1e-12
    assert 0.0 < rep["pi_bad"] < 1.0


def test_tiling_partitions_window():
    beta = lat.sample_beta(11, -3, 4, 1)
    window = lat.Box((0,), (48,))
    system = lat.DyadicSystem(beta, window)
    for j in range(-3, 5):
        covered = np.zeros(48, dtype=int)
        for cube in system.cubes_at_level(j):
            box = system.cube_box(cube)
            lo = max(box.lo[0], 0)
            hi = min(box.hi[0], 48)
            covered[lo:hi] += 1
        assert np.all(covered == 1)


def test_pi_good_complement():
    out = lat.estimate_pi_bad(1, lat.BadnessParams(8, HALF), 5000, seed=2)
    est = out.estimate
    assert est.complement.mean == 1.0 - est.mean
    assert est.complement.standard_error == est.standard_error


def test_invalid_ranges():
    with pytest.raises(ParameterError):
        lat.sample_beta(0, 5, 5, 1)
    with pytest.raises(ParameterError):
        lat.BadnessParams(0, HALF)
    with pytest.raises(ParameterError):
        lat.BadnessParams(4, Fraction(3, 2))
