import math

import numpy as np
import pytest

from haardyad import quadrature as quad
from haardyad.errors import ParameterError


def hilbert_closed_form(o: int) -> float:
    """int k(t) tent_o(t) dt for k = 1/(pi t), h = 1, separated offsets."""
    def a(x):
        return x * math.log(x) - x if x > 0 else 0.0
    s = 1 if o > 0 else -1
    o = abs(o)
    return s * ((a(o + 1) - a(o)) - (a(o) - a(o - 1))) / math.pi


def test_adjacent_closed_form():
    val = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([1]), use_numba=False)
    assert abs(val[0] - 2 * math.log(2) / math.pi) <= 1e-10
    neg = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([-1]), use_numba=False)
    assert abs(val[0] + neg[0]) <= 1e-15


def test_separated_closed_forms():
    offs = np.concatenate([np.arange(2, 40), -np.arange(2, 40)])
    vals = quad.table_1d(quad.KIND_HILBERT, 1.0, offs, use_numba=False)
    for o, v in zip(offs, vals):
        assert abs(v - hilbert_closed_form(int(o))) <= 1e-12


def test_scale_linearity_hilbert():
    # k homogeneous of degree -1 in 1D: the pair integral scales like h, up
    # to the absolute ring-stop threshold of the touching-cell scheme
    base = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([1, 3]), use_numba=False)
    fine = quad.table_1d(quad.KIND_HILBERT, 0.25, np.array([1, 3]), use_numba=False)
    assert np.abs(fine - base * 0.25).max() <= 5e-12


def test_refinement_oracle_1d():
    offs = np.array([1, 2, 5, -1])
    direct = quad.table_1d(quad.KIND_HILBERT, 1.0, offs, use_numba=False)
    refined = quad.refined_cell_table(quad.KIND_HILBERT, 1, 1.0, offs, refine=10)
    assert np.abs(direct - refined).max() <= 1e-10


def test_refinement_oracle_2d():
    offs = np.array([[1, 0], [1, 1], [2, 0], [0, 2], [3, 2], [-1, 0]])
    direct = quad.table_2d(quad.KIND_RIESZ1_2D, 1.0, offs, use_numba=False)
    refined = quad.refined_cell_table(quad.KIND_RIESZ1_2D, 2, 1.0, offs, refine=4)
    assert np.abs(direct - refined).max() <= 1e-8


def test_tolerance_halving_stability():
    for o in (1, -1):
        a = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([o]),
                          quad.QuadratureOptions(tol=1e-12), use_numba=False)
        b = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([o]),
                          quad.QuadratureOptions(tol=5e-13), use_numba=False)
        assert abs(a[0] - b[0]) <= 1e-8
    a = quad.table_2d(quad.KIND_RIESZ1_2D, 1.0, np.array([[1, 1]]),
                      quad.QuadratureOptions(tol=1e-12), use_numba=False)
    b = quad.table_2d(quad.KIND_RIESZ1_2D, 1.0, np.array([[1, 1]]),
                      quad.QuadratureOptions(tol=5e-13), use_numba=False)
    assert abs(a[0] - b[0]) <= 1e-8


def test_2d_antisymmetry_and_odd_axis():
    offs = np.array([[1, 0], [1, 1], [2, 3], [0, 1], [0, 5]])
    vals = quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offs, use_numba=False)
    neg = quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, -offs, use_numba=False)
    assert np.abs(vals + neg).max() <= 1e-14
    # kernel odd in t1: zero whenever o1 = 0 (domain symmetric in t1)
    assert abs(vals[3]) <= 1e-15 and abs(vals[4]) <= 1e-15


def test_far_field_midpoint():
    # W(o) ~ k(o h) h^2 for far offsets
    for o in (20, 50):
        v = quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([o]), use_numba=False)
        mid = 1.0 / (math.pi * o)
        assert abs(v[0] - mid) / abs(mid) <= 1.0 / o


def test_zero_offset_rejected():
    with pytest.raises(ParameterError):
        quad.table_1d(quad.KIND_HILBERT, 1.0, np.array([0]), use_numba=False)
    with pytest.raises(ParameterError):
        quad.table_2d(quad.KIND_RIESZ1_2D, 1.0, np.array([[0, 0]]),
                      use_numba=False)


def test_numba_numpy_twins_agree():
    offs1 = np.concatenate([np.arange(1, 30), -np.arange(1, 30)])
    a = quad.table_1d(quad.KIND_HILBERT, 0.125, offs1, use_numba=True)
    b = quad.table_1d(quad.KIND_HILBERT, 0.125, offs1, use_numba=False)
    assert np.abs(a - b).max() <= 1e-15
    offs2 = np.array([[i, j] for i in range(-4, 5) for j in range(-4, 5)
                      if (i, j) != (0, 0)])
    c = quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offs2, use_numba=True)
    d = quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offs2, use_numba=False)
    assert np.abs(c - d).max() <= 1e-15


def test_unknown_kind():
    with pytest.raises(ParameterError):
        quad.kernel_diff(99, np.zeros((1, 1)))
    with pytest.raises(ParameterError):
        quad.cell_pair_table(0, 3, 1.0, np.zeros((1, 3)))
