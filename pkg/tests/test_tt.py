import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_tt
from ttdiv import (
    TruncationConfig,
    TTTensor,
    tt_add,
    tt_conj,
    tt_dot,
    tt_element,
    tt_elements,
    tt_from_dense,
    tt_from_json,
    tt_from_rank_one_factors,
    tt_from_sum_of_factors,
    tt_hadamard,
    tt_hadamard_round,
    tt_imag,
    tt_inner,
    tt_norm,
    tt_ones,
    tt_orthogonalize,
    tt_random,
    tt_real,
    tt_round,
    tt_scale,
    tt_sub,
    tt_sum,
    tt_to_dense,
    tt_to_json,
    tt_zeros,
)


def test_construction_checks_ranks():
    with pytest.raises(ValueError):
        TTTensor([np.ones((1, 3, 2)), np.ones((3, 3, 1))])
    with pytest.raises(ValueError):
        TTTensor([np.ones((2, 3, 1))])
    w = TTTensor([np.ones((1, 3, 2)), np.ones((2, 4, 1))])
    assert w.modes == (3, 4) and w.ranks == (1, 2, 1)


def test_cores_are_read_only():
    w = tt_ones((3, 3))
    with pytest.raises(ValueError):
        w.cores[0][0, 0, 0] = 5.0


def test_ones_and_zeros():
    assert np.allclose(tt_to_dense(tt_ones((2, 3, 4))), 1.0)
    assert np.allclose(tt_to_dense(tt_zeros((2, 3))), 0.0)


def test_rank_one_and_sum_of_factors():
    f = [np.arange(1.0, 4.0), np.array([2.0, -1.0]), np.array([0.5, 1.5, 2.5, 3.0])]
    full = np.einsum("i,j,k->ijk", *f)
    assert np.allclose(tt_to_dense(tt_from_rank_one_factors(f)), full)
    s = tt_from_sum_of_factors(f)
    assert s.max_rank == 2
    ref = f[0][:, None, None] + f[1][None, :, None] + f[2][None, None, :]
    assert np.allclose(tt_to_dense(s), ref)


def test_dense_round_trip(rng):
    a = rng.standard_normal((3, 4, 5))
    w = tt_from_dense(a)
    assert np.allclose(tt_to_dense(w), a)
    assert w.ranks == (1, 3, 5, 1)


@pytest.mark.parametrize("seed", range(5))
def test_exact_algebra_matches_dense(seed):
    u = random_tt(seed, d=3, n=5)
    v = random_tt(seed + 100, d=3, n=5)
    U, V = tt_to_dense(u), tt_to_dense(v)
    assert np.allclose(tt_to_dense(tt_add(u, v)), U + V)
    assert np.allclose(tt_to_dense(tt_sub(u, v)), U - V)
    assert np.allclose(tt_to_dense(tt_scale(u, -2.5)), -2.5 * U)
    assert np.allclose(tt_to_dense(tt_hadamard(u, v)), U * V)
    assert np.isclose(tt_dot(u, v), np.sum(U * V))
    assert np.isclose(tt_norm(u), np.linalg.norm(U))
    assert np.isclose(tt_sum(u), U.sum())
    assert tt_hadamard(u, v).ranks == tuple(a * b for a, b in zip(u.ranks, v.ranks))
    assert tt_add(u, v).ranks[1:-1] == tuple(a + b for a, b in zip(u.ranks[1:-1], v.ranks[1:-1]))


def test_weighted_sum(rng):
    u = random_tt(3, d=3, n=4)
    w = [rng.random(4) for _ in range(3)]
    ref = np.einsum("ijk,i,j,k->", tt_to_dense(u), *w)
    assert np.isclose(tt_sum(u, w), ref)


def test_complex_inner_and_parts():
    u = random_tt(7, d=3, n=4, field="complex")
    v = random_tt(8, d=3, n=4, field="complex")
    U, V = tt_to_dense(u), tt_to_dense(v)
    # linear in the first argument, conjugate-linear in the second
    assert np.isclose(tt_inner(u, v), np.vdot(V, U))
    assert np.allclose(tt_to_dense(tt_conj(u)), U.conj())
    re, im = tt_real(u), tt_imag(u)
    assert re.field == "real" and im.field == "real"
    assert np.allclose(tt_to_dense(re), U.real)
    assert np.allclose(tt_to_dense(im), U.imag)


def test_elements():
    u = random_tt(11, d=4, n=6)
    U = tt_to_dense(u)
    idx = np.array([[0, 1, 2, 3], [5, 5, 5, 5], [1, 0, 4, 2]])
    assert np.allclose(tt_elements(u, idx), U[tuple(idx.T)])
    assert np.isclose(tt_element(u, (1, 2, 3, 4)), U[1, 2, 3, 4])
    assert np.isclose(u[1, 2, 3, 4], U[1, 2, 3, 4])


@pytest.mark.parametrize("direction", ["left", "right"])
def test_orthogonalize(direction):
    u = random_tt(4, d=4, n=5, r=3)
    o = tt_orthogonalize(u, direction)
    assert np.allclose(tt_to_dense(o), tt_to_dense(u))
    cores = o.cores[:-1] if direction == "left" else o.cores[1:]
    for c in cores:
        if direction == "left":
            m = c.reshape(-1, c.shape[2])
        else:
            m = c.reshape(c.shape[0], -1).T
        assert np.allclose(m.T @ m, np.eye(m.shape[1]))


@pytest.mark.parametrize("eps", [1e-3, 1e-6, 1e-9])
@pytest.mark.parametrize("seed", range(10))
def test_round_contract(seed, eps):
    w = tt_add(random_tt(seed, r=3), tt_scale(random_tt(seed, r=3), 1e-4))
    u, err = tt_round(w, TruncationConfig(eps), return_error=True)
    true = np.linalg.norm(tt_to_dense(w) - tt_to_dense(u)) / np.linalg.norm(tt_to_dense(w))
    assert true <= eps * (1 + 1e-8) + 1e-14
    assert np.isclose(err, true, rtol=1e-6, atol=1e-13)


def test_round_recovers_ranks_of_doubled_sum():
    w = random_tt(2, d=4, n=6, r=3)
    doubled = tt_add(w, w)
    assert doubled.max_rank == 6
    u = tt_round(doubled, TruncationConfig(1e-12))
    assert u.ranks == tt_round(w, TruncationConfig(1e-12)).ranks
    assert np.allclose(tt_to_dense(u), 2 * tt_to_dense(w))


def test_round_rank_cap():
    w = random_tt(5, d=4, n=6, r=3)
    u = tt_round(w, TruncationConfig(0.0, max_rank=2))
    assert u.max_rank <= 2


def test_round_complex():
    w = random_tt(5, d=3, n=4, r=2, field="complex")
    u = tt_round(tt_add(w, w), TruncationConfig(1e-12))
    assert u.max_rank == w.max_rank
    assert np.allclose(tt_to_dense(u), 2 * tt_to_dense(w))


@pytest.mark.parametrize("seed", range(3))
def test_hadamard_round_sketch_matches_exact(seed):
    u = random_tt(seed, d=4, n=6, r=9)
    v = random_tt(seed + 1, d=4, n=6, r=9)
    cfg = TruncationConfig(1e-10)
    exact = tt_round(tt_hadamard(u, v), cfg)
    sketched = tt_hadamard_round(u, v, cfg, exact_limit=4)
    ref = tt_to_dense(exact)
    assert np.linalg.norm(tt_to_dense(sketched) - ref) <= 1e-8 * np.linalg.norm(ref)


def test_json_round_trip():
    for field in ("real", "complex"):
        w = random_tt(9, d=3, n=4, field=field)
        back = tt_from_json(json.loads(json.dumps(tt_to_json(w))))
        assert back.ranks == w.ranks
        assert np.array_equal(tt_to_dense(back), tt_to_dense(w))


def test_operators():
    u, v = random_tt(1, d=2, n=4), random_tt(2, d=2, n=4)
    U, V = tt_to_dense(u), tt_to_dense(v)
    assert np.allclose((u + v).full(), U + V)
    assert np.allclose((u - v).full(), U - V)
    assert np.allclose((u * v).full(), U * V)
    assert np.allclose((2 * u).full(), 2 * U)
    assert np.allclose((u / 4).full(), U / 4)
    assert np.allclose((-u).full(), -U)


def test_mode_mismatch():
    with pytest.raises(ValueError):
        tt_add(tt_ones((2, 3)), tt_ones((3, 2)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), eps=st.sampled_from([1e-2, 1e-5, 1e-8]))
def test_round_is_quasi_optimal_property(seed, eps):
    w = random_tt(seed)
    u = tt_round(w, TruncationConfig(eps))
    W = tt_to_dense(w)
    assert np.linalg.norm(W - tt_to_dense(u)) <= eps * np.linalg.norm(W) * (1 + 1e-8) + 1e-14
    assert all(a <= b for a, b in zip(u.ranks, w.ranks))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_inner_product_is_bilinear_property(seed):
    u, v, z = random_tt(seed, d=3, n=4), random_tt(seed + 1, d=3, n=4), random_tt(seed + 2, d=3, n=4)
    lhs = tt_dot(tt_add(u, tt_scale(v, 3.0)), z)
    assert np.isclose(lhs, tt_dot(u, z) + 3.0 * tt_dot(v, z), atol=1e-12)
    assert np.isclose(tt_norm(u) ** 2, tt_dot(u, u))
