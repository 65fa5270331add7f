from fractions import Fraction

import numpy as np
import pytest

from haardyad import haar
from haardyad import lattice as lat
from haardyad import martingale as mart
from haardyad.errors import ParameterError

HALF = Fraction(1, 2)


def test_shift_complexity_examples():
    params = lat.BadnessParams(4, HALF)
    assert mart.shift_complexity(mart.ShiftMap.constant((0,)), params) == 4
    assert mart.shift_complexity(mart.ShiftMap.constant((8,)), params) == 6
    by_level = mart.ShiftMap.by_level({j: (8,) for j in range(8)})
    assert mart.shift_complexity(by_level, params) == 6
    # exact ceiling at a power of two: |m| = 4, gamma = 1/2 -> 2 * 2 = 4
    assert mart.shift_complexity(mart.ShiftMap.constant((4,)),
                                 lat.BadnessParams(1, HALF)) == 4
    # just above a power of two must round up: |m| = 5 -> ceil(2 log2 5) = 5
    assert mart.shift_complexity(mart.ShiftMap.constant((5,)),
                                 lat.BadnessParams(1, HALF)) == 5


def test_level_class_examples():
    assert mart.level_class(lat.DyadicCube(5, (0,)), 2) == 1
    assert mart.level_class(lat.DyadicCube(0, (0,)), 7) == 0
    # equal classes with different sidelengths differ by >= M+1 levels
    big_m = 3
    hits = {}
    for level in range(0, 12):
        hits.setdefault(mart.level_class(lat.DyadicCube(level, (0,)), big_m),
                        []).append(level)
    for levels in hits.values():
        diffs = np.diff(levels)
        assert np.all(diffs >= big_m + 1)


def test_orbit_parity_path_example():
    window = lat.Box((0,), (8,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-1, 0, 1), window)
    par = mart.orbit_parity(system, 0, mart.ShiftMap.constant((3,)))
    # orbits {0,3,6}, {1,4,7}, {2,5} colored 0,1,0 / 0,1,0 / 0,1
    assert [par[(i,)] for i in range(8)] == [0, 0, 0, 1, 1, 1, 0, 0]


def test_orbit_parity_zero_map_and_alternation():
    window = lat.Box((0,), (32,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-1, 0, 1), window)
    par0 = mart.orbit_parity(system, 0, mart.ShiftMap.constant((0,)))
    assert all(v == 0 for v in par0.values())
    for m in (1, 2, 5, -3):
        psi = mart.ShiftMap.constant((m,))
        par = mart.orbit_parity(system, 0, psi)
        for corner, bit in par.items():
            trans = (corner[0] + m,)
            if trans in par:
                assert par[trans] == 1 - bit


def test_compatibility_far_apart_and_identical():
    window = lat.Box((-512,), (512,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    psi = mart.ShiftMap.constant((2,))
    a = lat.DyadicCube(2, (0,))
    b = lat.DyadicCube(2, (64,))
    assert mart.compatibility_check(a, b, psi, system)
    assert mart.compatibility_check(a, a, psi, system)
    # equal size, overlapping translate pair: incompatible
    c = lat.DyadicCube(2, (8,))  # psi(a) = [8, 12) touches c = [8, 12)
    assert not mart.compatibility_check(a, c, psi, system)


def test_compatibility_containment_case():
    window = lat.Box((-512,), (512,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    psi = mart.ShiftMap.constant((1,))
    big = lat.DyadicCube(0, (0,))        # [0, 256)
    small = lat.DyadicCube(4, (32,))     # deep inside the left child
    assert mart.compatibility_check(small, big, psi, system)
    assert mart.compatibility_check(big, small, psi, system)


def test_partition_class_count_and_pairs():
    params = lat.BadnessParams(4, HALF)
    levels = 6
    width = 2 << levels
    window = lat.Box((-1024,), (width + 1024,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, levels, 1), window)
    inner = lat.Box((0,), (width,))
    good = mart.collect_good_cubes(system, params, range(0, levels), inner,
                                   k_max=4)
    assert good, "expected good cubes on the window"
    psi = mart.ShiftMap.constant((8,))
    classes = mart.partition(good, psi, params, system, inner)
    assert len(classes) == 14  # 2 (M+1) with M = 6
    assert sum(len(c.cubes) for c in classes) == len(good)
    members = [c for cl in classes for c in cl.cubes]
    assert len(set(members)) == len(members)
    for cl in classes:
        assert cl.check_all_pairs(psi, system)


def test_partition_empty_input():
    params = lat.BadnessParams(4, HALF)
    window = lat.Box((0,), (64,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    classes = mart.partition([], mart.ShiftMap.constant((2,)), params, system)
    assert len(classes) == 2 * (4 + 1)
    assert all(not c.cubes for c in classes)


def test_build_differences_integral_zero_and_recon():
    seq, system = mart.canonical_sequence(m=3)
    box = seq.terms[0].box
    ones = haar.GridFunction(box, seq.terms[0].level,
                             np.ones(box.extent + (1,)))
    for term in seq.terms[:6]:
        assert abs(haar.inner_product(term, ones)) <= 1e-13
    # A-type reconstruction identities, exact
    psi = mart.ShiftMap.constant((3,))
    d0, d1 = seq.terms[0], seq.terms[1]
    cube = seq.cubes[0]
    h_eta = haar.haar_function(haar.HaarIndex(cube, (1,)), system, box)
    h_th = haar.haar_function(haar.HaarIndex(psi.apply(cube, system), (1,)),
                              system, box)
    assert np.abs((d0 + d1).values - h_eta.values).max() <= 1e-15
    assert np.abs((d0 - d1).values - h_th.values).max() <= 1e-15


def test_b_type_identities():
    seq, system = mart.canonical_sequence(m=3, flavor="B")
    psi = mart.ShiftMap.constant((3,))
    box = seq.terms[0].box
    d0, d1 = seq.terms[0], seq.terms[1]
    cube = seq.cubes[0]
    trans = psi.apply(cube, system)
    h_th = haar.haar_function(haar.HaarIndex(cube, (1,)), system, box)
    h0t = haar.haar_function(haar.HaarIndex(trans, (0,)), system, box)
    h0i = haar.haar_function(haar.HaarIndex(cube, (0,)), system, box)
    assert np.abs((d0 + d1).values - h_th.values).max() <= 1e-15
    assert np.abs((d0 - 2.0 * d1).values - (h0t - h0i).values).max() <= 1e-15
    # h0_I = (h^theta_I)^+ + (h^theta_I)^-
    plus = np.maximum(h_th.values, 0.0)
    minus = np.maximum(-h_th.values, 0.0)
    assert np.abs(plus + minus - h0i.values).max() <= 1e-15


def test_verify_mds_and_misordering():
    for flavor in ("A", "B"):
        seq, _ = mart.canonical_sequence(m=3, flavor=flavor)
        rep = mart.verify_mds(seq)
        assert rep.ok and rep.max_atom_mean <= 1e-12
        rev = mart.DifferenceSequence(list(reversed(seq.terms)),
                                      list(reversed(seq.cubes)),
                                      list(reversed(seq.u_values)), flavor)
        assert not mart.verify_mds(rev).ok


def test_apply_transform():
    seq, _ = mart.canonical_sequence(m=3)
    lam = np.zeros(len(seq))
    out = mart.apply_transform(seq, lam)
    assert np.abs(out.values).max() == 0.0
    lam = np.ones(len(seq))
    out = mart.apply_transform(seq, lam, bound=1.0)
    acc = seq.terms[0]
    for t in seq.terms[1:]:
        acc = acc + t
    assert np.abs(out.values - acc.values).max() <= 1e-14
    with pytest.raises(ParameterError):
        mart.apply_transform(seq, 2.0 * lam, bound=1.0)
    with pytest.raises(ParameterError):
        mart.apply_transform(seq, lam[:-1])


def test_transform_ratio_p2_unimodular_exact():
    seq, _ = mart.canonical_sequence(m=3)
    est = mart.estimate_transform_ratio(2.0, trials=100, seed=1,
                                        unimodular=True, seq=seq)
    assert abs(est.value - 1.0) <= 1e-12


def test_transform_ratio_p4_bounded():
    seq, _ = mart.canonical_sequence(m=3)
    for p in (4.0, 4.0 / 3.0):
        bound = max(p, p / (p - 1.0)) - 1.0 + 0.05
        est = mart.estimate_transform_ratio(p, trials=400, seed=2, seq=seq)
        assert est.value <= bound
        est_v = mart.estimate_transform_ratio(p, d=4, trials=200, seed=3,
                                              seq=seq)
        assert est_v.value <= bound


def test_transform_ratio_validates_p():
    with pytest.raises(ParameterError):
        mart.estimate_transform_ratio(1.0, trials=10)


def test_b_type_requires_moving_translate():
    params = lat.BadnessParams(4, HALF)
    window = lat.Box((-64,), (64,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    cubes = [lat.DyadicCube(2, (0,))]
    with pytest.raises(ParameterError):
        mart.build_differences(cubes, (0,), (1,), mart.ShiftMap.constant((0,)),
                               "B", system, window)


def test_a_type_requires_cancellative_profiles():
    params = lat.BadnessParams(4, HALF)
    window = lat.Box((-64,), (64,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(-4, 4, 1), window)
    cubes = [lat.DyadicCube(2, (0,))]
    with pytest.raises(ParameterError):
        mart.build_differences(cubes, (0,), (1,), mart.ShiftMap.constant((1,)),
                               "A", system, window)
    with pytest.raises(ParameterError):
        mart.build_differences(cubes, (1,), (1,), mart.ShiftMap.constant((1,)),
                               "C", system, window)
