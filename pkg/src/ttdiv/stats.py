"""Discrete integrals, moments, consistency repairs and divergences of TT pdfs.

Every integral is the grid sum times the cell volume ``V/N``.  Log, root and
ratio tensors come from one of three routes:

``analytic``
    rank-one inputs only: the entrywise function is applied to the 1-D
    factors (a log becomes a sum of univariate terms, TT rank 2).
``algebra``
    the iterative Hadamard-algebra routines of :mod:`ttdiv.pointwise`.
``cross``
    the integrand is interpolated directly by TT-cross.

``auto`` picks ``analytic`` where it applies, ``algebra`` for inputs of rank
at most ``algebra_rank_limit`` and ``cross`` otherwise.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .cross import CrossConfig, apply_via_cross
from .errors import DomainError
from .pointwise import (
    IterationConfig,
    had_abs,
    had_inverse,
    had_levelset,
    had_log,
    had_min,
    had_pow,
    had_sqrt_pair,
)
from .spectral import Grid
from .tt import (
    TruncationConfig,
    TTTensor,
    tt_add,
    tt_dot,
    tt_from_rank_one_factors,
    tt_from_sum_of_factors,
    tt_hadamard,
    tt_norm,
    tt_ones,
    tt_round,
    tt_scale,
    tt_sub,
    tt_sum,
)

SUPPORT_FLOOR = 1e-30


@dataclass(frozen=True)
class DiscretePdf:
    """Density samples on a grid; ``normalization`` is the discrete integral."""

    tensor: TTTensor
    grid: Grid
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.tensor.modes != self.grid.modes:
            raise ValueError(f"tensor modes {self.tensor.modes} do not match grid {self.grid.modes}")

    @property
    def normalization(self) -> float:
        return discrete_integral(self.tensor, self.grid)


@dataclass
class DivergenceReport:
    name: str
    value: float
    reference: float | None = None
    err_abs: float | None = None
    err_rel: float | None = None
    max_tt_rank: int = 0
    wall_time_s: float = 0.0
    d: int = 0
    n: int = 0
    method: str = ""
    extra: dict = field(default_factory=dict)

    def with_reference(self, reference: float) -> "DivergenceReport":
        self.reference = float(reference)
        self.err_abs = abs(self.value - self.reference)
        self.err_rel = self.err_abs / abs(self.reference) if self.reference != 0 else math.inf
        return self

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("extra")
        return out


@dataclass(frozen=True)
class DivergenceConfig:
    method: str = "auto"
    trunc: TruncationConfig = TruncationConfig(1e-9)
    iteration: IterationConfig = IterationConfig(tol=1e-9, trunc=TruncationConfig(1e-9))
    cross: CrossConfig = CrossConfig(tol=1e-8)
    support_floor: float = SUPPORT_FLOOR
    algebra_rank_limit: int = 16

    def __post_init__(self):
        if self.method not in ("auto", "analytic", "algebra", "cross"):
            raise ValueError(f"unknown method {self.method!r}")


def _t(p) -> TTTensor:
    return p.tensor if isinstance(p, DiscretePdf) else p


def _check(grid: Grid, *tensors):
    for w in tensors:
        if w.modes != grid.modes:
            raise ValueError(f"tensor modes {w.modes} do not match grid {grid.modes}")


# integrals ---------------------------------------------------------------------

def discrete_integral(p, grid: Grid) -> float:
    w = _t(p)
    _check(grid, w)
    return grid.cell * tt_sum(w)


def discrete_expectation(f, p, grid: Grid) -> float:
    f, p = _t(f), _t(p)
    _check(grid, f, p)
    return grid.cell * tt_dot(f, p)


def moment(p, grid: Grid, dims=()) -> float:
    """Raw moment ``E[x_{k_1} ... x_{k_m}]``; repeated dimensions give powers."""
    w = _t(p)
    counts = [0] * grid.d
    for k in dims:
        if not 0 <= k < grid.d:
            raise ValueError(f"invalid dimension {k} for d={grid.d}")
        counts[k] += 1
    factors = [grid.points(k) ** c for k, c in enumerate(counts)]
    return discrete_expectation(tt_from_rank_one_factors(factors), w, grid)


# consistency -------------------------------------------------------------------

@dataclass
class ConsistencyReport:
    min_entry: float
    integral: float
    hermitean_ok: bool
    nonnegative: bool
    normalized: bool


def check_consistency(p, grid: Grid, trunc: TruncationConfig | None = None,
                      iteration: IterationConfig | None = None, norm_tol: float = 1e-6) -> ConsistencyReport:
    """Minimum entry, integral, and whether the tensor is real (so that its
    pcf is Hermitean); nothing is modified."""
    w = _t(p)
    trunc = trunc or TruncationConfig(1e-12)
    iteration = iteration or IterationConfig(trunc=trunc)
    lo, _ = had_min(w, iteration)
    s = discrete_integral(w, grid)
    eps = 10 * trunc.epsilon * max(abs(lo), 1e-300)
    return ConsistencyReport(lo, s, w.field == "real", lo >= -eps, abs(s - 1.0) <= norm_tol)


def repair_negativity(p, trunc: TruncationConfig | None = None, method: str = "algebra",
                      iteration: IterationConfig | None = None, cross: CrossConfig | None = None) -> TTTensor:
    """``P - levelset_{(-inf, 0)}(P)``: negative entries set to zero.

    ``method="cross"`` interpolates ``max(P, 0)`` directly, for tensors whose
    Hadamard squares are too large for the sign iteration.
    """
    w = _t(p)
    trunc = trunc or TruncationConfig(1e-9)
    if method == "cross":
        return apply_via_cross(lambda x: np.maximum(x, 0.0), w, cross or CrossConfig(tol=1e-8))
    iteration = iteration or IterationConfig(trunc=trunc)
    neg = had_levelset(w, (None, 0.0), iteration)
    return tt_round(tt_sub(w, neg), trunc)


def renormalize(p, grid: Grid) -> TTTensor:
    w = _t(p)
    beta = discrete_integral(w, grid)
    if not beta > 0:
        raise DomainError(f"cannot renormalize, integral is {beta:.3g}")
    return tt_scale(w, 1.0 / beta)


# entrywise helpers ---------------------------------------------------------------

def _rank_one_factors(w: TTTensor):
    """Non-negative 1-D factors of a rank-one tensor, or ``None``.  Signs are
    moved to the first factor; a tensor with negative entries gives ``None``."""
    if w.max_rank != 1 or w.field != "real":
        return None
    factors = [c.reshape(-1).copy() for c in w.cores]
    sign = 1.0
    for f in factors:
        if np.all(f <= 0):
            f *= -1.0
            sign = -sign
        elif np.any(f < 0):
            return None
    return None if sign < 0 else factors


def _resolve(cfg: DivergenceConfig, tensors, analytic_ok: bool = True) -> str:
    if cfg.method != "auto":
        if cfg.method == "analytic" and not all(_rank_one_factors(t) is not None for t in tensors):
            raise ValueError("analytic route needs non-negative rank-one inputs")
        return cfg.method
    if analytic_ok and all(_rank_one_factors(t) is not None for t in tensors):
        return "analytic"
    if max(t.max_rank for t in tensors) <= cfg.algebra_rank_limit:
        return "algebra"
    return "cross"


_TINY = 1e-300


def _log(w: TTTensor, method: str, cfg: DivergenceConfig, ranks: list) -> TTTensor:
    if method == "analytic":
        factors = _rank_one_factors(w)
        out = tt_from_sum_of_factors([np.log(np.maximum(f, _TINY)) for f in factors])
    elif method == "algebra":
        res = had_log(w, cfg.iteration)
        ranks.append(res.max_rank_seen)
        out = res.value
    else:
        floor = cfg.support_floor
        out = apply_via_cross(lambda x: np.log(np.maximum(x, floor)), w, cfg.cross)
    ranks.append(out.max_rank)
    return out


def _sqrt(w: TTTensor, method: str, cfg: DivergenceConfig, ranks: list) -> TTTensor:
    if method == "analytic":
        out = tt_from_rank_one_factors([np.sqrt(f) for f in _rank_one_factors(w)])
    elif method == "algebra":
        root, _ = had_sqrt_pair(w, cfg.iteration)
        ranks.append(root.max_rank_seen)
        out = root.value
    else:
        out = apply_via_cross(lambda x: np.sqrt(np.maximum(x, 0.0)), w, cfg.cross)
    ranks.append(out.max_rank)
    return out


def _report(name, value, grid, method, ranks, t0, **extra) -> DivergenceReport:
    return DivergenceReport(name=name, value=float(value), max_tt_rank=int(max(ranks)),
                            wall_time_s=time.perf_counter() - t0, d=grid.d, n=int(max(grid.n)),
                            method=method, extra=extra)


# divergences ---------------------------------------------------------------------

def entropy(p, grid: Grid, cfg: DivergenceConfig | None = None) -> float:
    """Differential entropy ``-(V/N) <log P, P>``."""
    cfg = cfg or DivergenceConfig()
    w = _t(p)
    _check(grid, w)
    method = _resolve(cfg, [w])
    if method == "cross":
        floor = cfg.support_floor
        integrand = apply_via_cross(lambda x: np.where(x > floor, -x * np.log(np.maximum(x, floor)), 0.0),
                                    w, cfg.cross)
        return grid.cell * tt_sum(integrand)
    return -grid.cell * tt_dot(_log(w, method, cfg, [w.max_rank]), w)


def kl_divergence(p, q, grid: Grid, cfg: DivergenceConfig | None = None) -> DivergenceReport:
    """``(V/N) (<log P, P> - <log Q, P>)``.

    The cross route interpolates the whole integrand ``P (log P - log Q)``,
    set to zero wherever ``P`` or ``Q`` is below the support floor.
    """
    cfg = cfg or DivergenceConfig()
    t0 = time.perf_counter()
    P, Q = _t(p), _t(q)
    _check(grid, P, Q)
    method = _resolve(cfg, [P, Q])
    ranks = [P.max_rank, Q.max_rank]
    if method == "cross":
        floor = cfg.support_floor

        def integrand(x, y):
            m = (x > floor) & (y > floor)
            xs, ys = np.where(m, x, 1.0), np.where(m, y, 1.0)
            return np.where(m, x * (np.log(xs) - np.log(ys)), 0.0)

        h = apply_via_cross(integrand, (P, Q), cfg.cross)
        ranks.append(h.max_rank)
        value = grid.cell * tt_sum(h)
    else:
        lp = _log(P, method, cfg, ranks)
        lq = _log(Q, method, cfg, ranks)
        value = grid.cell * tt_dot(P, tt_sub(lp, lq))
    return _report("kl", value, grid, method, ranks, t0)


def hellinger_sq(p, q, grid: Grid, cfg: DivergenceConfig | None = None) -> DivergenceReport:
    """Squared Hellinger distance ``(V/2N) ||sqrt(P) - sqrt(Q)||^2``."""
    cfg = cfg or DivergenceConfig()
    t0 = time.perf_counter()
    P, Q = _t(p), _t(q)
    _check(grid, P, Q)
    method = _resolve(cfg, [P, Q])
    ranks = [P.max_rank, Q.max_rank]
    if method == "cross":
        h = apply_via_cross(lambda x, y: (np.sqrt(np.maximum(x, 0)) - np.sqrt(np.maximum(y, 0))) ** 2,
                            (P, Q), cfg.cross)
        ranks.append(h.max_rank)
        value = 0.5 * grid.cell * tt_sum(h)
    else:
        # ||sqrt P||^2 = S(P) exactly, so only the cross term depends on the
        # iterated roots; their error enters scaled by the overlap of P and Q
        sp, sq = _sqrt(P, method, cfg, ranks), _sqrt(Q, method, cfg, ranks)
        overlap = grid.cell * tt_dot(sp, sq)
        value = 0.5 * (discrete_integral(P, grid) + discrete_integral(Q, grid)) - overlap
    return _report("hellinger_sq", value, grid, method, ranks, t0)


def bhattacharyya(p, q, grid: Grid, cfg: DivergenceConfig | None = None) -> DivergenceReport:
    """``-log((V/N) <sqrt(P), sqrt(Q)>)``."""
    cfg = cfg or DivergenceConfig()
    t0 = time.perf_counter()
    P, Q = _t(p), _t(q)
    _check(grid, P, Q)
    method = _resolve(cfg, [P, Q])
    ranks = [P.max_rank, Q.max_rank]
    if method == "cross":
        h = apply_via_cross(lambda x, y: np.sqrt(np.maximum(x, 0) * np.maximum(y, 0)), (P, Q), cfg.cross)
        ranks.append(h.max_rank)
        coeff = grid.cell * tt_sum(h)
    else:
        coeff = grid.cell * tt_dot(_sqrt(P, method, cfg, ranks), _sqrt(Q, method, cfg, ranks))
    if not coeff > 0:
        raise DomainError(f"Bhattacharyya coefficient is {coeff:.3g}")
    return _report("bhattacharyya", -math.log(coeff), grid, method, ranks, t0, coefficient=coeff)


# Bregman -------------------------------------------------------------------------

@dataclass(frozen=True)
class BregmanGenerator:
    """Convex ``phi`` with its derivative, for numpy arrays."""

    name: str
    phi: Callable
    dphi: Callable


BREGMAN_GENERATORS = {
    "square": BregmanGenerator("square", lambda t: t * t, lambda t: 2.0 * t),
    "neg_entropy": BregmanGenerator(
        "neg_entropy",
        lambda t: np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0),
        lambda t: np.log(np.maximum(t, SUPPORT_FLOOR)) + 1.0,
    ),
}


def bregman(p, q, grid: Grid, phi="square", cfg: DivergenceConfig | None = None) -> DivergenceReport:
    """``S(phi(P) - phi(Q) - (P - Q) * phi'(Q))`` for ``phi`` in
    ``BREGMAN_GENERATORS`` (``square`` or ``neg_entropy``)."""
    cfg = cfg or DivergenceConfig()
    t0 = time.perf_counter()
    gen = BREGMAN_GENERATORS[phi] if isinstance(phi, str) else phi
    P, Q = _t(p), _t(q)
    _check(grid, P, Q)
    ranks = [P.max_rank, Q.max_rank]
    diff = tt_sub(P, Q)
    if gen.name == "square":
        method = "algebra" if cfg.method == "auto" else cfg.method
        if method == "cross":
            h = apply_via_cross(lambda x, y: (x - y) ** 2, (P, Q), cfg.cross)
            value = grid.cell * tt_sum(h)
        else:
            value = grid.cell * tt_norm(diff) ** 2
        return _report("bregman_square", value, grid, method, ranks, t0)
    if gen.name == "neg_entropy":
        method = _resolve(cfg, [P, Q])
        if method == "cross":
            h = apply_via_cross(lambda x, y: gen.phi(x) - gen.phi(y) - (x - y) * gen.dphi(y), (P, Q), cfg.cross)
            value = grid.cell * tt_sum(h)
        else:
            lp, lq = _log(P, method, cfg, ranks), _log(Q, method, cfg, ranks)
            # S(P log P) - S(Q log Q) - S((P - Q)(log Q + 1))
            value = grid.cell * (tt_dot(P, lp) - tt_dot(Q, lq) - tt_dot(diff, lq) - tt_sum(diff))
        return _report("bregman_neg_entropy", value, grid, method, ranks, t0)
    # generic generator: cross only
    h = apply_via_cross(lambda x, y: gen.phi(x) - gen.phi(y) - (x - y) * gen.dphi(y), (P, Q), cfg.cross)
    return _report(f"bregman_{gen.name}", grid.cell * tt_sum(h), grid, "cross", ranks + [h.max_rank], t0)


# f-divergences -------------------------------------------------------------------

def _js(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, t * np.log(safe), 0.0) - (t + 1) * np.log((t + 1) / 2)


def f_generator(name: str, k: int = 3) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar generator ``f(t)`` of the named f-divergence."""
    table = {
        "kl": lambda t: np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0),
        "reverse_kl": lambda t: -np.log(t),
        "hellinger_sq": lambda t: (np.sqrt(t) - 1.0) ** 2,
        "total_variation": lambda t: 0.5 * np.abs(t - 1.0),
        "pearson": lambda t: (t - 1.0) ** 2,
        "neyman": lambda t: 1.0 / t - 1.0,
        "pearson_vajda_k": lambda t: (t - 1.0) ** k,
        "abs_pearson_vajda_k": lambda t: np.abs(t - 1.0) ** k,
        "jensen_shannon": _js,
    }
    if name not in table:
        raise KeyError(f"unknown f-divergence {name!r}; known: {sorted(table)}")
    return table[name]


F_DIVERGENCES = ("kl", "reverse_kl", "hellinger_sq", "total_variation", "pearson", "neyman",
                 "pearson_vajda_k", "abs_pearson_vajda_k", "jensen_shannon")


def _f_of_ratio(name: str, R: TTTensor, k: int, cfg: DivergenceConfig, ranks: list) -> TTTensor:
    """``f(R)`` with Hadamard-algebra routines only."""
    it, tr = cfg.iteration, cfg.trunc
    one = tt_ones(R.modes)
    rm1 = tt_round(tt_sub(R, one), tr)
    rnd = lambda x: tt_round(x, tr)
    if name == "kl":
        return rnd(tt_hadamard(R, had_log(R, it).value))
    if name == "reverse_kl":
        return tt_scale(had_log(R, it).value, -1.0)
    if name == "hellinger_sq":
        s = rnd(tt_sub(had_sqrt_pair(R, it)[0].value, one))
        return rnd(tt_hadamard(s, s))
    if name == "total_variation":
        return tt_scale(had_abs(rm1, it), 0.5)
    if name == "pearson":
        return rnd(tt_hadamard(rm1, rm1))
    if name == "neyman":
        return rnd(tt_sub(had_inverse(R, it).value, one))
    if name == "pearson_vajda_k":
        return had_pow(rm1, k, it)
    if name == "abs_pearson_vajda_k":
        return had_pow(had_abs(rm1, it), k, it)
    if name == "jensen_shannon":
        half = rnd(tt_scale(tt_add(R, one), 0.5))
        a = tt_hadamard(R, had_log(R, it).value)
        b = tt_hadamard(tt_scale(half, 2.0), had_log(half, it).value)
        return rnd(tt_sub(a, b))
    raise KeyError(name)


def f_divergence(p, q, grid: Grid, f_name: str, cfg: DivergenceConfig | None = None, k: int = 3) -> DivergenceReport:
    """``(V/N) <f(P / Q), Q>`` for a registered generator ``f``.

    The algebra route forms ``P * Q^{-1}`` with the Newton inverse and applies
    ``f`` with Hadamard-algebra routines; the cross route interpolates
    ``Q f(P/Q)`` (zero where ``Q`` is below the support floor).  With
    ``hellinger_sq`` the value is twice :func:`hellinger_sq`.
    """
    cfg = cfg or DivergenceConfig()
    t0 = time.perf_counter()
    f = f_generator(f_name, k)
    P, Q = _t(p), _t(q)
    _check(grid, P, Q)
    ranks = [P.max_rank, Q.max_rank]
    method = _resolve(cfg, [P, Q], analytic_ok=False) if cfg.method != "analytic" else "algebra"
    if method == "cross":
        floor = cfg.support_floor

        def integrand(x, y):
            m = y > floor
            ys = np.where(m, y, 1.0)
            with np.errstate(all="ignore"):
                val = y * f(np.where(m, x / ys, 1.0))
            return np.where(m, val, 0.0)

        h = apply_via_cross(integrand, (P, Q), cfg.cross)
        ranks.append(h.max_rank)
        value = grid.cell * tt_sum(h)
    else:
        inv = had_inverse(Q, cfg.iteration)
        ranks.append(inv.max_rank_seen)
        R = tt_round(tt_hadamard(P, inv.value), cfg.trunc)
        fr = _f_of_ratio(f_name, R, k, cfg, ranks)
        ranks.append(fr.max_rank)
        value = grid.cell * tt_dot(fr, Q)
    return _report(f"f_{f_name}", value, grid, method, ranks, t0)
