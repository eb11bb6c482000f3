import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttdiv import (
    CrossConfig,
    DiscretePdf,
    DivergenceConfig,
    DomainError,
    IterationConfig,
    TruncationConfig,
    bhattacharyya,
    bregman,
    check_consistency,
    discrete_expectation,
    discrete_integral,
    entropy,
    f_divergence,
    f_generator,
    hellinger_sq,
    kl_divergence,
    make_grid,
    moment,
    renormalize,
    repair_negativity,
    tt_from_dense,
    tt_from_rank_one_factors,
    tt_round,
    tt_scale,
    tt_to_dense,
)
from ttdiv.dense import (
    dense_bhattacharyya,
    dense_entropy,
    dense_f_divergence,
    dense_hellinger_sq,
    dense_kl,
)

GRID, _ = make_grid(2.0, 6, 3)
TIGHT = DivergenceConfig(trunc=TruncationConfig(1e-12),
                         iteration=IterationConfig(tol=1e-11, trunc=TruncationConfig(1e-12)),
                         cross=CrossConfig(tol=1e-11))


def density(seed, rank_one=False):
    """Positive normalized density on GRID, rank one or rank two."""
    g = np.random.default_rng(seed)
    f = [0.2 + g.random(6) for _ in range(3)]
    a = np.einsum("i,j,k->ijk", *f)
    if not rank_one:
        a = a + np.einsum("i,j,k->ijk", *[0.2 + g.random(6) for _ in range(3)])
    a = a / (a.sum() * GRID.cell)
    if rank_one:
        s = (f[0].sum() * f[1].sum() * f[2].sum()) * GRID.cell
        return tt_from_rank_one_factors([f[0] / s, f[1], f[2]]), a
    return tt_from_dense(a, TruncationConfig(1e-14)), a


def cfg(method):
    return DivergenceConfig(method=method, trunc=TIGHT.trunc, iteration=TIGHT.iteration, cross=TIGHT.cross)


def test_integral_expectation_moment():
    p, a = density(0)
    assert math.isclose(discrete_integral(p, GRID), 1.0)
    x = GRID.points(1)
    mean = GRID.cell * np.sum(a * x[None, :, None])
    assert math.isclose(moment(p, GRID, (1,)), mean)
    second = GRID.cell * np.sum(a * (x**2)[None, :, None])
    assert math.isclose(moment(p, GRID, (1, 1)), second)
    assert math.isclose(moment(p, GRID, ()), 1.0)
    f, b = density(1)
    assert math.isclose(discrete_expectation(f, p, GRID), GRID.cell * np.sum(a * b))
    with pytest.raises(ValueError):
        moment(p, GRID, (3,))


def test_discrete_pdf_checks_modes():
    p, _ = density(0)
    with pytest.raises(ValueError):
        DiscretePdf(p, make_grid(1.0, 4, 3)[0])
    assert math.isclose(DiscretePdf(p, GRID).normalization, 1.0)


def test_consistency_and_repair():
    p, a = density(2)
    rep = check_consistency(p, GRID)
    assert rep.nonnegative and rep.normalized and rep.hermitean_ok
    assert math.isclose(rep.min_entry, a.min(), rel_tol=1e-6)
    bumped = a.copy()
    bumped[0, 0, 0] = -0.05
    bumped[5, 5, 5] = -0.02
    w = tt_from_dense(bumped)
    assert not check_consistency(w, GRID).nonnegative
    for method in ("algebra", "cross"):
        fixed = tt_to_dense(repair_negativity(w, TruncationConfig(1e-12), method=method))
        assert np.abs(fixed - np.maximum(bumped, 0)).max() < 1e-7
    r = renormalize(tt_scale(p, 3.0), GRID)
    assert math.isclose(discrete_integral(r, GRID), 1.0)
    with pytest.raises(DomainError):
        renormalize(tt_scale(p, -1.0), GRID)


@pytest.mark.parametrize("method", ["analytic", "algebra", "cross"])
def test_entropy_routes(method):
    p, a = density(3, rank_one=True)
    assert math.isclose(entropy(p, GRID, cfg(method)), dense_entropy(a, GRID.cell), rel_tol=1e-8)


@pytest.mark.parametrize("method", ["analytic", "algebra", "cross"])
@pytest.mark.parametrize("seed", range(3))
def test_two_sample_divergences_rank_one(method, seed):
    (p, a), (q, b) = density(seed, True), density(seed + 10, True)
    c = cfg(method)
    assert math.isclose(kl_divergence(p, q, GRID, c).value, dense_kl(a, b, GRID.cell), rel_tol=1e-7, abs_tol=1e-10)
    assert math.isclose(hellinger_sq(p, q, GRID, c).value, dense_hellinger_sq(a, b, GRID.cell), rel_tol=1e-7,
                        abs_tol=1e-10)
    assert math.isclose(bhattacharyya(p, q, GRID, c).value, dense_bhattacharyya(a, b, GRID.cell), rel_tol=1e-7,
                        abs_tol=1e-10)


@pytest.mark.parametrize("method", ["algebra", "cross"])
@pytest.mark.parametrize("seed", range(3))
def test_two_sample_divergences_rank_two(method, seed):
    (p, a), (q, b) = density(seed), density(seed + 10)
    c = cfg(method)
    rep = kl_divergence(p, q, GRID, c)
    assert rep.method == method and rep.d == 3 and rep.n == 6
    assert math.isclose(rep.value, dense_kl(a, b, GRID.cell), rel_tol=1e-7, abs_tol=1e-10)
    assert math.isclose(hellinger_sq(p, q, GRID, c).value, dense_hellinger_sq(a, b, GRID.cell), rel_tol=1e-7,
                        abs_tol=1e-10)


def test_auto_route_selection():
    (p, _), (q, _) = density(0, True), density(1, True)
    assert kl_divergence(p, q, GRID).method == "analytic"
    (p2, _), (q2, _) = density(0), density(1)
    assert kl_divergence(p2, q2, GRID).method == "algebra"
    with pytest.raises(ValueError):
        kl_divergence(p2, q2, GRID, DivergenceConfig(method="analytic"))
    with pytest.raises(ValueError):
        DivergenceConfig(method="guess")


def test_identical_inputs_give_zero():
    p, _ = density(4)
    for fn in (kl_divergence, hellinger_sq, bhattacharyya):
        assert abs(fn(p, p, GRID, TIGHT).value) < 1e-9
    assert abs(bregman(p, p, GRID, "square").value) < 1e-12
    assert abs(f_divergence(p, p, GRID, "pearson", TIGHT).value) < 1e-9


def test_bhattacharyya_hellinger_identity():
    for seed in range(3):
        (p, _), (q, _) = density(seed), density(seed + 5)
        h = hellinger_sq(p, q, GRID, TIGHT).value
        bh = bhattacharyya(p, q, GRID, TIGHT).value
        assert math.isclose(h, 1 - math.exp(-bh), rel_tol=1e-8, abs_tol=1e-12)


def test_bregman():
    (p, a), (q, b) = density(5), density(6)
    sq = bregman(p, q, GRID, "square").value
    assert math.isclose(sq, GRID.cell * np.sum((a - b) ** 2), rel_tol=1e-10)
    assert math.isclose(bregman(p, q, GRID, "square", cfg("cross")).value, sq, rel_tol=1e-8)
    ref = GRID.cell * np.sum(a * np.log(a) - b * np.log(b) - (a - b) * (np.log(b) + 1))
    for method in ("algebra", "cross"):
        assert math.isclose(bregman(p, q, GRID, "neg_entropy", cfg(method)).value, ref, rel_tol=1e-7)
    # normalized inputs: the neg-entropy Bregman divergence equals KL
    assert math.isclose(ref, dense_kl(a, b, GRID.cell), rel_tol=1e-9)


@pytest.mark.parametrize("name", ["kl", "reverse_kl", "hellinger_sq", "total_variation", "pearson", "neyman",
                                  "pearson_vajda_k", "abs_pearson_vajda_k", "jensen_shannon"])
@pytest.mark.parametrize("method", ["algebra", "cross"])
def test_f_divergences_against_dense(name, method):
    (p, a), (q, b) = density(7), density(8)
    ref = dense_f_divergence(a, b, f_generator(name), GRID.cell)
    got = f_divergence(p, q, GRID, name, cfg(method)).value
    assert math.isclose(got, ref, rel_tol=1e-7, abs_tol=1e-10)


def test_f_divergence_consistency():
    (p, _), (q, _) = density(9), density(10)
    assert math.isclose(f_divergence(p, q, GRID, "kl", TIGHT).value, kl_divergence(p, q, GRID, TIGHT).value,
                        rel_tol=1e-8)
    assert math.isclose(f_divergence(p, q, GRID, "hellinger_sq", TIGHT).value,
                        2 * hellinger_sq(p, q, GRID, TIGHT).value, rel_tol=1e-8)
    with pytest.raises(KeyError):
        f_generator("nope")


def test_kl_decomposes_over_product_densities():
    (p, _), (q, _) = density(11, True), density(12, True)
    total = kl_divergence(p, q, GRID).value
    parts = 0.0
    for k in range(3):
        a = p.cores[k].reshape(-1) * 1.0
        b = q.cores[k].reshape(-1) * 1.0
        dx = GRID.dx[k]
        a, b = a / (a.sum() * dx), b / (b.sum() * dx)
        parts += dense_kl(a, b, dx)
    assert math.isclose(total, parts, rel_tol=1e-8)


def test_results_stable_under_rounding_inputs():
    (p, _), (q, _) = density(13), density(14)
    p2, q2 = tt_round(p, TruncationConfig(1e-12)), tt_round(q, TruncationConfig(1e-12))
    for fn in (kl_divergence, hellinger_sq):
        assert abs(fn(p, q, GRID, TIGHT).value - fn(p2, q2, GRID, TIGHT).value) < 1e-9


def test_report_reference_fields():
    (p, _), (q, _) = density(0, True), density(1, True)
    rep = kl_divergence(p, q, GRID).with_reference(1.0)
    assert math.isclose(rep.err_abs, abs(rep.value - 1.0))
    assert set(rep.as_dict()) >= {"name", "value", "reference", "err_abs", "err_rel", "max_tt_rank", "wall_time_s"}


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 10**5))
def test_divergences_nonnegative_property(seed):
    (p, _), (q, _) = density(seed), density(seed + 1)
    for fn in (kl_divergence, hellinger_sq, bhattacharyya):
        assert fn(p, q, GRID).value >= -10 * 1e-9
