import numpy as np
import pytest

from haardyad import haar
from haardyad import lattice as lat
from haardyad.errors import ParameterError


def make_system(levels=6, n=1, width=None, seed=None):
    width = width or (1 << levels)
    window = lat.Box((0,) * n, (width,) * n)
    if seed is None:
        beta = lat.ShiftParameter.zero(0, levels, n)
    else:
        beta = lat.sample_beta(seed, 0, levels, n)
    return lat.DyadicSystem(beta, window)


def test_haar_value_left_half_positive():
    system = make_system(2)
    idx = haar.HaarIndex(lat.DyadicCube(0, (0,)), (1,))
    assert haar.haar_value(idx, (1,), system) == 1.0   # x = 0.25
    assert haar.haar_value(idx, (2,), system) == -1.0  # x = 0.5
    assert haar.haar_value(idx, (5,), system) == 0.0   # outside


def test_haar_value_averaging_and_tensor():
    system = make_system(2)
    h0 = haar.HaarIndex(lat.DyadicCube(0, (0,)), (0,))
    assert haar.haar_value(h0, (3,), system) == 1.0
    sys2 = make_system(2, n=2, width=4)
    idx = haar.HaarIndex(lat.DyadicCube(0, (0, 0)), (1, 1))
    assert haar.haar_value(idx, (1, 3), sys2) == -1.0  # (0.25, 0.75)


def test_haar_value_magnitude():
    system = make_system(4)
    idx = haar.HaarIndex(lat.DyadicCube(2, (4,)), (1,))
    assert haar.haar_value(idx, (4,), system) == 2.0  # |I|^{-1/2} = 2^{2/2}


def test_orthonormality_exhaustive():
    system = make_system(6)
    box = system.window
    indices = [haar.HaarIndex(lat.DyadicCube(0, (0,)), (0,))]
    for j in range(0, 6):
        for corner in range(0, 64, system.size(j)):
            indices.append(haar.HaarIndex(lat.DyadicCube(j, (corner,)), (1,)))
    funcs = [haar.haar_function(ix, system, box) for ix in indices]
    gram = np.array([[haar.inner_product(a, b) for b in funcs] for a in funcs])
    assert np.abs(gram - np.eye(len(funcs))).max() <= 1e-12


def test_analyze_constant_has_no_details():
    system = make_system(5)
    f = haar.GridFunction(system.window, 5, np.full((32, 1), 3.25))
    coeffs = haar.analyze(f, system)
    for arr in coeffs.details.values():
        assert np.abs(arr).max() <= 1e-12


def test_analyze_single_haar_gives_delta():
    system = make_system(5)
    idx = haar.HaarIndex(lat.DyadicCube(2, (8,)), (1,))
    f = haar.haar_function(idx, system, system.window)
    coeffs = haar.analyze(f, system)
    arr = coeffs.details[2]
    pos = 8 // system.size(2)
    assert abs(arr[pos, 0, 0] - 1.0) <= 1e-12
    total = coeffs.mass()
    assert abs(total - 1.0) <= 1e-12


def test_fast_analyze_matches_naive_oracle():
    # naive oracle: direct inner products cube by cube, up to 2^8 cells
    system = make_system(8)
    f = haar.random_grid_function(system.window, 8, d=2, seed=3)
    coeffs = haar.analyze(f, system)
    rng = np.random.default_rng(0)
    for _ in range(60):
        j = int(rng.integers(0, 8))
        size = system.size(j)
        pos = int(rng.integers(0, 256 // size))
        idx = haar.HaarIndex(lat.DyadicCube(j, (pos * size,)), (1,))
        direct = haar.haar_coeff_of(f, idx, system)
        fast = coeffs.details[j][pos, :, 0]
        assert np.abs(direct - fast).max() <= 1e-12


def test_roundtrip_random():
    system = make_system(10, width=1024)
    f = haar.random_grid_function(system.window, 10, d=3, seed=8)
    coeffs = haar.analyze(f, system)
    g = haar.synthesize(coeffs, system, box=f.box)
    assert np.abs(g.values - f.values).max() <= 1e-12


def test_roundtrip_2d_shifted():
    window = lat.Box((-40, -40), (80, 80))
    system = lat.DyadicSystem(lat.sample_beta(5, 0, 4, 2), window)
    box = lat.Box((-3, 2), (29, 34))
    f = haar.random_grid_function(box, 4, seed=3)
    coeffs = haar.analyze(f, system)
    g = haar.synthesize(coeffs, system, box=box)
    assert np.abs(g.values - f.values).max() <= 1e-12


def test_synthesize_zero_and_single_coefficient():
    system = make_system(5)
    f = haar.zeros(system.window, 5)
    coeffs = haar.analyze(f, system)
    g = haar.synthesize(coeffs, system)
    assert np.abs(g.values).max() == 0.0
    coeffs.details[3][2, 0, 0] = 2.5
    g = haar.synthesize(coeffs, system)
    idx = haar.HaarIndex(lat.DyadicCube(3, (2 * system.size(3),)), (1,))
    ref = haar.haar_function(idx, system, coeffs.box)
    assert np.abs(g.values - 2.5 * ref.values).max() <= 1e-12


def test_project_detail_identities():
    system = make_system(7, width=128)
    f = haar.random_grid_function(system.window, 7, seed=5)
    const = haar.GridFunction(system.window, 7, np.full((128, 1), 2.0))
    for j in range(0, 7):
        pj = haar.project(const, j, system)
        assert np.abs(pj.values - 2.0).max() <= 1e-12
    # telescoping reconstruction
    acc = haar.project(f, 0, system)
    for j in range(0, 7):
        acc = acc + haar.detail(f, j, system)
    assert np.abs(acc.values - f.values).max() <= 1e-12
    # details have zero cube averages
    for j in range(0, 7):
        d = haar.detail(f, j, system)
        means = d.values.reshape(-1, system.size(j)).mean(axis=1)
        assert np.abs(means).max() <= 1e-12


def test_inner_product_and_vector_pairing():
    system = make_system(4)
    f = haar.random_grid_function(system.window, 4, d=3, seed=1)
    g = haar.random_grid_function(system.window, 4, d=3, seed=2)
    direct = float(np.sum(f.values * g.values)) * f.cell_volume
    assert abs(haar.inner_product(f, g) - direct) <= 1e-12
    assert haar.inner_product(f, f) >= 0.0
    scalar = haar.random_grid_function(system.window, 4, d=1, seed=3)
    vec = haar.inner_product(f, scalar)
    assert vec.shape == (3,)
    other = haar.random_grid_function(lat.Box((0,), (8,)), 3, seed=1)
    with pytest.raises(ParameterError):
        haar.inner_product(f, other)


def test_parseval_and_sign_flip_invariance():
    system = make_system(9, width=512)
    f = haar.random_grid_function(system.window, 9, seed=12)
    coeffs = haar.analyze(f, system)
    assert abs(coeffs.mass() - haar.inner_product(f, f)) <= 1e-12
    rng = np.random.default_rng(4)
    for j in range(0, 9):
        signs = rng.integers(0, 2, size=coeffs.details[j].shape) * 2.0 - 1.0
        coeffs.details[j] *= signs
    flipped = haar.synthesize(coeffs, system, box=f.box)
    assert abs(haar.lp_norm(flipped, 2) - haar.lp_norm(f, 2)) <= 1e-12


def test_lp_norm_exact_cell_sum():
    box = lat.Box((0,), (4,))
    f = haar.GridFunction(box, 2, np.array([[1.0], [-2.0], [0.0], [2.0]]))
    # cells have volume 1/4: ||f||_3^3 = (1 + 8 + 0 + 8) / 4
    assert abs(haar.lp_norm(f, 3) - (17 / 4) ** (1 / 3)) <= 1e-14


def test_analyze_window_mismatch():
    system = make_system(4)
    f = haar.random_grid_function(lat.Box((0,), (32,)), 4, seed=0)
    with pytest.raises(ParameterError):
        haar.analyze(f, system)  # support outside the window


def test_project_level_out_of_range():
    system = make_system(4)
    f = haar.random_grid_function(system.window, 4, seed=0)
    with pytest.raises(Exception) as exc:
        haar.project(f, 9, system)
    assert "level" in str(exc.value)
