import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from ttdiv import (
    AlphaStableSpec,
    CrossConfig,
    DivergenceConfig,
    GaussianSpec,
    alpha_stable_grids,
    alpha_stable_pcf,
    alpha_stable_pdf_tt,
    discrete_integral,
    gaussian_bhattacharyya_coefficient,
    gaussian_hellinger_analytic,
    gaussian_kld_analytic,
    gaussian_logpdf_tt,
    gaussian_pdf_tt,
    kl_divergence,
    make_grid,
    tt_to_dense,
)

# KL of the validation pair (d=16, sigma 1.5 vs 22.1, means 1.1 vs 1.4) from the
# closed form, evaluated once and frozen
KL_D16 = 35.080128460202


def test_gaussian_spec_validation():
    with pytest.raises(ValueError):
        GaussianSpec((0.0, 0.0), (1.0, -1.0))
    with pytest.raises(ValueError):
        GaussianSpec((0.0, 0.0), (1.0, 1.0, 1.0))
    s = GaussianSpec((0.0, 1.0), 2.0)
    assert s.sigma == (2.0, 2.0) and s.d == 2


def test_pdf_and_logpdf_on_grid():
    grid, _ = make_grid(8.0, 32, 3)
    spec = GaussianSpec((0.5, -0.5, 0.0), (1.0, 1.5, 2.0))
    p = gaussian_pdf_tt(spec, grid)
    assert p.tensor.max_rank == 1
    # sigma=2 on [-8, 8) loses about 1e-4 of the mass in the tails
    assert math.isclose(p.normalization, 1.0, abs_tol=2e-4)
    x = [grid.points(k) for k in range(3)]
    X = np.meshgrid(*x, indexing="ij")
    logref = sum(-0.5 * ((X[k] - spec.mean[k]) / spec.sigma[k]) ** 2 - math.log(spec.sigma[k] * math.sqrt(2 * math.pi))
                 for k in range(3))
    assert np.allclose(tt_to_dense(p.tensor), np.exp(logref))
    lg = gaussian_logpdf_tt(spec, grid)
    assert lg.max_rank == 2 and np.allclose(tt_to_dense(lg), logref)


def test_coarse_grid_warns_once():
    grid, _ = make_grid(8.0, 8, 2)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        gaussian_pdf_tt(GaussianSpec.isotropic(2, 0.0, 1.0), grid)
    assert len(rec) == 1


def test_gaussian_kld_closed_form():
    s = GaussianSpec.isotropic(3, 0.0, 1.0)
    assert gaussian_kld_analytic(s, s) == 0.0
    # 1-D: KL(N(0,1) || N(1,4)) = log 2 + (1 + 1)/8 - 1/2
    a, b = GaussianSpec((0.0,), (1.0,)), GaussianSpec((1.0,), (2.0,))
    assert math.isclose(gaussian_kld_analytic(a, b), math.log(2) + 0.25 - 0.5)
    p1 = GaussianSpec.isotropic(16, 1.1, 1.5)
    p2 = GaussianSpec.isotropic(16, 1.4, 22.1)
    assert math.isclose(gaussian_kld_analytic(p1, p2), KL_D16, rel_tol=1e-12)
    assert abs(gaussian_kld_analytic(p1, p2) - 35.08) < 0.005


def test_gaussian_hellinger_closed_form():
    a, b = GaussianSpec((0.0,), (1.0,)), GaussianSpec((0.0,), (2.0,))
    # K = sqrt(2 s1 s2 / (s1^2 + s2^2)) = sqrt(4/5)
    assert math.isclose(gaussian_bhattacharyya_coefficient(a, b), math.sqrt(0.8))
    num, _ = integrate.quad(lambda x: math.sqrt(math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
                                                * math.exp(-x * x / 8) / (2 * math.sqrt(2 * math.pi))), -50, 50)
    assert math.isclose(gaussian_hellinger_analytic(a, b), 1 - num, rel_tol=1e-9)
    assert gaussian_hellinger_analytic(a, a) == 0.0
    p1 = GaussianSpec.isotropic(16, 1.1, 1.5)
    p2 = GaussianSpec.isotropic(16, 1.4, 22.1)
    assert abs(gaussian_hellinger_analytic(p1, p2) - 0.99999) < 1e-5


def test_tt_kl_matches_closed_form_d16():
    grid, _ = make_grid(128.0, 256, 16)
    s1, s2 = GaussianSpec.isotropic(16, 1.1, 1.5), GaussianSpec.isotropic(16, 1.4, 22.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p, q = gaussian_pdf_tt(s1, grid), gaussian_pdf_tt(s2, grid)
    rep = kl_divergence(p, q, grid)
    assert rep.method == "analytic"
    assert math.isclose(rep.value, KL_D16, rel_tol=1e-6)


def test_alpha_spec_validation():
    with pytest.raises(ValueError):
        AlphaStableSpec(0.0, 2)
    with pytest.raises(ValueError):
        AlphaStableSpec(2.5, 2)
    with pytest.raises(ValueError):
        AlphaStableSpec(1.0, 2, shape=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        AlphaStableSpec(1.0, 2, form="other")


def test_alpha_pcf_basic():
    spec = AlphaStableSpec(1.3, 3, form="quadratic", shape=np.diag([1.0, 2.0, 0.5]))
    pcf = alpha_stable_pcf(spec)
    assert np.isclose(pcf(np.zeros(3)), 1.0)
    t = np.random.default_rng(0).standard_normal((100, 3)) * 3
    assert np.all(np.abs(pcf(t)) <= 1.0)
    q = np.einsum("mi,i,mi->m", t, [1.0, 2.0, 0.5], t)
    assert np.allclose(pcf(t), np.exp(-q ** 0.65))
    shifted = alpha_stable_pcf(AlphaStableSpec(1.3, 3, mean=(1.0, 0.0, -1.0)))
    assert np.allclose(np.abs(shifted(t)), np.abs(alpha_stable_pcf(AlphaStableSpec(1.3, 3))(t)))


def test_alpha_two_is_standard_gaussian():
    grid, dual = make_grid(8.0, 64, 2)
    p = alpha_stable_pdf_tt(AlphaStableSpec(2.0, 2), grid, dual)
    g = gaussian_pdf_tt(GaussianSpec.isotropic(2, 0.0, 1.0), grid)
    assert np.abs(tt_to_dense(p.tensor) - tt_to_dense(g.tensor)).max() < 1e-8
    assert p.info["normalization_error"] < 1e-8


def test_alpha_cross_route_matches_gaussian():
    # a full shape matrix forces the cross route even for alpha = 2
    C = np.array([[0.5, 0.1], [0.1, 0.5]])
    grid, dual = make_grid(10.0, 64, 2)
    p = alpha_stable_pdf_tt(AlphaStableSpec(2.0, 2, shape=C, form="quadratic"), grid, dual,
                            cross_cfg=CrossConfig(tol=1e-10))
    cov = 2 * C
    X = np.stack(np.meshgrid(grid.points(0), grid.points(1), indexing="ij"), -1)
    ref = np.exp(-0.5 * np.einsum("...i,ij,...j->...", X, np.linalg.inv(cov), X)) / (2 * np.pi * math.sqrt(np.linalg.det(cov)))
    assert np.abs(tt_to_dense(p.tensor) - ref).max() < 1e-8


def test_alpha_grids_conventions():
    g, d = alpha_stable_grids(128.0, 64, 3, sampling="spatial")
    assert np.isclose(d.dt[0], 2 * 128.0 / 64)
    assert np.isclose(g.a[0], 64 * math.pi / 256)
    g2, _ = alpha_stable_grids(4.0, 16, 2)
    assert g2.a == (4.0, 4.0)
    with pytest.raises(ValueError):
        alpha_stable_grids(4.0, 16, 2, sampling="other")


def test_alpha_heavy_tail_normalization():
    grid, dual = make_grid(20.0, 64, 2)
    p = alpha_stable_pdf_tt(AlphaStableSpec(1.0, 2), grid, dual)
    # the periodized density always sums to phi(0) = 1
    assert abs(discrete_integral(p, grid) - 1.0) < 1e-6
    assert p.info["pdf_rank"] >= 1 and p.info["cross_converged"]


# continuum KL between elliptical alpha-stable laws, independent of the grid
# pipeline: X = sqrt(A) G with G ~ N(0, I) and A positive (alpha/2)-stable,
# sampled by Kanter's representation A = (K(U)/E)^((1-b)/b), U ~ U(0, pi), E ~ Exp(1)

def _mixture_log_density(r, d, alpha):
    b = alpha / 2
    u, uw = np.polynomial.legendre.leggauss(200)
    u, uw = (u + 1) * np.pi / 2, uw / 2
    K = np.sin(b * u) ** (b / (1 - b)) * np.sin((1 - b) * u) / np.sin(u) ** (1 / (1 - b))
    y = np.linspace(-60, 4, 1500)
    e, ew = np.exp(y), np.exp(-np.exp(y)) * np.exp(y) * (y[1] - y[0])
    A = (K[:, None] / e[None, :]) ** ((1 - b) / b)
    logw = np.log(uw[:, None] * ew[None, :] + 1e-320)
    out = []
    for x in np.atleast_1d(r):
        lw = logw - 0.5 * d * np.log(2 * np.pi * A) - x * x / (2 * A)
        m = lw.max()
        out.append(m + np.log(np.exp(lw - m).sum()))
    return np.array(out)


def continuum_kl_from_gaussian(d, alpha, log_q=None):
    """KL(N(0, I) || alpha-stable) with pcf exp(-(|t|^2/2)^(alpha/2))."""
    from scipy import stats
    r = np.linspace(1e-6, 12.0, 400)
    lq = _mixture_log_density(r, d, alpha) if log_q is None else log_q(r)
    w = stats.chi.pdf(r, d)
    entropy = 0.5 * d * math.log(2 * math.pi * math.e)
    return -entropy - integrate.simpson(w * lq, x=r)


# [DERIVED] frozen outputs of continuum_kl_from_gaussian for d=8
CONTINUUM_KL_D8 = {1.9: 0.034616614699, 1.5: 0.297377342252, 0.5: 1.593949416111}


def test_mixture_oracle_matches_cauchy_closed_form():
    # alpha = 1 is the multivariate Cauchy law with scale 1/sqrt(2)
    d, g = 8, 1 / math.sqrt(2)

    def cauchy(r):
        return (math.lgamma((d + 1) / 2) - (d + 1) / 2 * math.log(math.pi) + math.log(g)
                - (d + 1) / 2 * np.log(g * g + r * r))

    assert math.isclose(continuum_kl_from_gaussian(d, 1.0), continuum_kl_from_gaussian(d, 1.0, cauchy),
                        rel_tol=1e-9)


@pytest.mark.parametrize("alpha", [1.9, 0.5])
def test_mixture_oracle_frozen(alpha):
    assert math.isclose(continuum_kl_from_gaussian(8, alpha), CONTINUUM_KL_D8[alpha], rel_tol=1e-9)


def test_alpha_kl_matches_continuum_d8():
    # pcf sampled with step 0.5; the near-Gaussian pair is cheap and well resolved
    grid, dual = alpha_stable_grids(16.0, 64, 8, sampling="spatial")
    p = alpha_stable_pdf_tt(AlphaStableSpec(2.0, 8), grid, dual)
    q = alpha_stable_pdf_tt(AlphaStableSpec(1.9, 8), grid, dual)
    cfg = DivergenceConfig(method="cross", cross=CrossConfig(tol=1e-6, initial_rank=8, rank_step=8))
    kl = kl_divergence(p, q, grid, cfg).value
    assert abs(kl - CONTINUUM_KL_D8[1.9]) / CONTINUUM_KL_D8[1.9] < 1e-3
