"""Divergences and statistics of high-dimensional densities stored as
tensor trains.

The public API is re-exported here; see the submodules for details:
:mod:`~ttdiv.tt` (TT format), :mod:`~ttdiv.cp` (CP format),
:mod:`~ttdiv.dense` (full-array reference implementations),
:mod:`~ttdiv.pointwise` (entrywise functions by truncated iterations),
:mod:`~ttdiv.spectral` (grids and Fourier transforms),
:mod:`~ttdiv.cross` (maxvol and TT-cross), :mod:`~ttdiv.stats`
(integrals and divergences), :mod:`~ttdiv.distributions` (Gaussian and
alpha-stable test laws).
"""

from .cp import CPTensor, cp_add, cp_hadamard, cp_inner, cp_scale, cp_to_tt
from .cross import (
    CrossConfig,
    CrossInfo,
    MaxvolResult,
    TTFunction,
    apply_via_cross,
    maxvol,
    skeleton,
    tt_cross,
)
from .distributions import (
    AlphaStableSpec,
    GaussianSpec,
    alpha_stable_grids,
    alpha_stable_pcf,
    alpha_stable_pdf_tt,
    gaussian_bhattacharyya_coefficient,
    gaussian_hellinger_analytic,
    gaussian_kld_analytic,
    gaussian_logpdf_tt,
    gaussian_pdf_tt,
)
from .errors import DivergenceError, DomainError
from .pointwise import (
    IterationConfig,
    IterationResult,
    had_abs,
    had_characteristic,
    had_exp,
    had_inverse,
    had_levelset,
    had_log,
    had_max,
    had_min,
    had_mroot,
    had_norm_inf,
    had_pow,
    had_sign,
    had_sqrt_pair,
    iterate_truncated,
)
from .spectral import (
    DualGrid,
    Grid,
    ImaginaryResidualError,
    eval_on_grid,
    make_grid,
    pcf_to_pdf,
    pcf_to_pdf_complex,
    pdf_to_pcf,
)
from .stats import (
    BREGMAN_GENERATORS,
    F_DIVERGENCES,
    ConsistencyReport,
    DiscretePdf,
    DivergenceConfig,
    DivergenceReport,
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
    moment,
    renormalize,
    repair_negativity,
)
from .tt import *  # noqa: F401,F403
from .tt import __all__ as _tt_all

__version__ = "0.1.0"
