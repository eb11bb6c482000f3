import math

import numpy as np
import pytest

from conftest import random_tt
from ttdiv import DomainError, tt_to_dense
from ttdiv.dense import (
    DenseTensor,
    dense_add,
    dense_bhattacharyya,
    dense_entropy,
    dense_expectation,
    dense_f_divergence,
    dense_from_tt,
    dense_hadamard,
    dense_hellinger_sq,
    dense_inner,
    dense_integral,
    dense_kl,
    dense_norm,
    dense_outer,
    dense_pointwise,
    dense_reduce,
    dense_scale,
)


def test_from_tt_and_cap():
    w = random_tt(0, d=3, n=4)
    assert np.allclose(dense_from_tt(w).data, tt_to_dense(w))
    with pytest.raises(MemoryError):
        dense_from_tt(w, cap=10)


def test_read_only():
    t = DenseTensor(np.ones(3))
    with pytest.raises(ValueError):
        t.data[0] = 2


def test_pointwise_domain_error_names_index():
    x = np.array([[1.0, 4.0], [-1.0, 9.0]])
    assert np.allclose(dense_pointwise(np.abs(x), np.sqrt).data, np.sqrt(np.abs(x)))
    with pytest.raises(DomainError) as err:
        dense_pointwise(x, np.sqrt)
    assert err.value.index == (1, 0)


def test_algebra_and_reductions():
    x, y = np.arange(6.0).reshape(2, 3), np.ones((2, 3))
    assert np.allclose(dense_add(x, y).data, x + 1)
    assert np.allclose(dense_scale(x, 2).data, 2 * x)
    assert np.allclose(dense_hadamard(x, y).data, x)
    assert dense_inner(x, y) == 15.0
    assert dense_reduce(x, "max") == 5.0 and dense_reduce(x, "min") == 0.0 and dense_reduce(x, "sum") == 15.0
    assert math.isclose(dense_norm(x), math.sqrt(55))
    with pytest.raises(ValueError):
        dense_reduce(x, "median")


def test_outer():
    assert np.allclose(dense_outer([[1, 2], [3, 4]]), [[3, 4], [6, 8]])


def test_two_point_divergences_by_hand():
    # p = (0.25, 0.75), q = (0.5, 0.5), unit cell
    p, q = np.array([0.25, 0.75]), np.array([0.5, 0.5])
    assert math.isclose(dense_integral(p, 1.0), 1.0)
    assert math.isclose(dense_expectation(np.array([0.0, 1.0]), p, 1.0), 0.75)
    assert math.isclose(dense_entropy(p, 1.0), -(0.25 * math.log(0.25) + 0.75 * math.log(0.75)))
    assert math.isclose(dense_kl(p, q, 1.0), 0.25 * math.log(0.5) + 0.75 * math.log(1.5))
    bc = math.sqrt(0.125) + math.sqrt(0.375)
    assert math.isclose(dense_bhattacharyya(p, q, 1.0), -math.log(bc))
    assert math.isclose(dense_hellinger_sq(p, q, 1.0), 1.0 - bc)
    tv = dense_f_divergence(p, q, lambda t: 0.5 * np.abs(t - 1), 1.0)
    assert math.isclose(tv, 0.25)


def test_kl_masks_zero_entries():
    p, q = np.array([0.0, 1.0]), np.array([0.5, 0.5])
    assert math.isclose(dense_kl(p, q, 1.0), math.log(2.0))
