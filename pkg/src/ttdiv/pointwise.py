"""Point-wise functions of TT tensors built from Hadamard-algebra operations.

Every routine here only scales, adds and multiplies tensors entrywise, and
rounds after each step.  Iterative methods run through
:func:`iterate_truncated`; series are summed term by term with rounding after
every accumulated term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DivergenceError, DomainError
from .tt import (
    TruncationConfig,
    TTTensor,
    tt_add,
    tt_hadamard,
    tt_hadamard_round,
    tt_norm,
    tt_ones,
    tt_round,
    tt_scale,
    tt_sub,
    tt_zeros,
)

State = Union[TTTensor, tuple]


@dataclass(frozen=True)
class IterationConfig:
    """Stopping rule and rounding for truncated iterations.

    ``tol`` bounds the relative step ``||v_{i+1} - v_i|| / ||v_i||``;
    ``trunc`` is applied after every step; ``scaling`` is ``"auto"`` or an
    explicit starting-value scale factor.
    """

    tol: float = 1e-9
    max_iter: int = 100
    trunc: TruncationConfig = field(default_factory=lambda: TruncationConfig(1e-12))
    scaling: Union[str, float] = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.scaling != "auto" and not (isinstance(self.scaling, (int, float)) and self.scaling > 0):
            raise ValueError("scaling must be 'auto' or a positive number")


@dataclass
class IterationResult:
    value: TTTensor
    iterations: int
    converged: bool
    final_step_norm: float
    max_rank_seen: int
    extra: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


# small helpers ---------------------------------------------------------------

def _const(modes, c) -> TTTensor:
    return tt_scale(tt_ones(modes), c)


def _affine(a, v: TTTensor, b) -> TTTensor:
    """``a*1 + b*v`` (rank + 1)."""
    return tt_add(_const(v.modes, a), tt_scale(v, b))


def _mul(u: TTTensor, v: TTTensor, cfg: IterationConfig) -> TTTensor:
    """Rounded Hadamard product."""
    return tt_hadamard_round(u, v, cfg.trunc)


def _finite(w: TTTensor) -> bool:
    return all(np.all(np.isfinite(c)) for c in w.cores)


def _rel_step(new: TTTensor, old: TTTensor) -> float:
    base = tt_norm(old)
    diff = tt_norm(tt_sub(new, old))
    return diff / base if base > 0 else diff


def _as_tuple(s: State) -> tuple:
    return s if isinstance(s, tuple) else (s,)


def iterate_truncated(psi: Callable[[State], State], v0: State, cfg: IterationConfig | None = None,
                      trace: Callable[[dict], None] | None = None, monitor: Sequence[int] | None = None) -> IterationResult:
    """Run ``v <- round(psi(v))`` until the relative step drops below ``cfg.tol``.

    ``v0`` may be a single tensor or a tuple (coupled iterations); the step
    norm is the largest relative step over the components listed in
    ``monitor`` (all by default).  The returned
    ``value`` is the first component, the full final state is stored in
    ``extra["state"]``.
    """
    cfg = cfg or IterationConfig()
    rnd = lambda x: tt_round(x, cfg.trunc)
    state = tuple(rnd(s) for s in _as_tuple(v0))
    single = not isinstance(v0, tuple)
    max_rank = max(s.max_rank for s in state)
    history = []
    step = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        new = psi(state[0] if single else state)
        new = tuple(rnd(s) for s in _as_tuple(new))
        if not all(_finite(s) for s in new):
            raise DivergenceError(f"non-finite values at iteration {it}", it, max_rank)
        max_rank = max(max_rank, max(s.max_rank for s in new))
        watched = range(len(new)) if monitor is None else monitor
        step = max(_rel_step(new[i], state[i]) for i in watched)
        history.append(step)
        if trace is not None:
            trace({"iteration": it, "step_norm": step, "max_rank": max(s.max_rank for s in new)})
        state = new
        if step <= cfg.tol:
            converged = True
            break
    return IterationResult(state[0], it, converged, step, max_rank,
                           extra={"state": state}, history=history)


def _scaling(cfg: IterationConfig, default: float) -> float:
    return default if cfg.scaling == "auto" else float(cfg.scaling)


# extreme values --------------------------------------------------------------

def _multi_dot(tensors: Sequence[TTTensor]):
    """``sum_i prod_k t_k[i]`` by a left-to-right sweep."""
    g = np.ones((1,) * len(tensors))
    for cores in zip(*[t.cores for t in tensors]):
        # absorb one core at a time, keeping the mode index in front:
        # g[a, b, ...] -> g[i, b, ..., p] -> ... -> g[i, p, q, ...]
        g = np.moveaxis(np.tensordot(g, cores[0], axes=([0], [0])), -2, 0)
        for c in cores[1:]:
            g = np.einsum("ib...,biq->i...q", g, c)
        g = g.sum(axis=0)
    return float(np.real(g.reshape(-1)[0]))


@dataclass
class _Extreme:
    value: float
    magnitude: float
    certificate: TTTensor
    converged: bool
    iterations: int
    error_bound: float


def _power_extreme(w: TTTensor, cfg: IterationConfig, rel_tol: float) -> _Extreme:
    """Exponentiated power iteration: ``v <- v*v / ||v*v||`` starting at
    ``w / ||w||``.  The weights ``v**2`` concentrate on the entries of largest
    magnitude; ``sum(w v^2)`` is the signed value there and
    ``sqrt(sum(w^2 v^2) - value^2)`` is the spread of the weighted values."""
    nrm = tt_norm(w)
    if nrm == 0:
        return _Extreme(0.0, 0.0, w, True, 0, 0.0)
    v = tt_scale(w, 1.0 / nrm)
    value = err = mag = math.nan
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        v = _mul(v, v, cfg)
        nv = tt_norm(v)
        if nv == 0 or not math.isfinite(nv):
            break
        v = tt_scale(v, 1.0 / nv)
        value = _multi_dot([w, v, v])
        second = _multi_dot([w, w, v, v])
        mag = math.sqrt(max(second, 0.0))
        err = math.sqrt(max(second - value * value, 0.0))
        if err <= rel_tol * mag:
            converged = True
            break
    return _Extreme(value, mag, v, converged, it, err)


def had_norm_inf(w: TTTensor, cfg: IterationConfig | None = None, rel_tol: float = 1e-6) -> float:
    """Estimate ``max |w|``."""
    cfg = cfg or IterationConfig()
    return _power_extreme(w, cfg, rel_tol).magnitude


def had_max(w: TTTensor, cfg: IterationConfig | None = None, rel_tol: float = 1e-6):
    """Largest entry of ``w`` and the final normalised iterate localising it.

    The power iteration finds the entry of largest magnitude; if that entry is
    negative (or magnitudes tie with opposite signs) the tensor is shifted by
    the magnitude estimate so all entries become non-negative and the iteration
    is repeated.
    """
    cfg = cfg or IterationConfig()
    ext = _power_extreme(w, cfg, rel_tol)
    if ext.converged and ext.value >= 0:
        return ext.value, ext.certificate
    shift = ext.magnitude if ext.converged else 1.01 * ext.magnitude
    if shift == 0:
        return 0.0, ext.certificate
    shifted = tt_round(tt_add(w, _const(w.modes, shift)), cfg.trunc)
    ext2 = _power_extreme(shifted, cfg, rel_tol)
    if not ext2.converged:
        warnings.warn(f"max estimate did not converge in {cfg.max_iter} iterations "
                      f"(spread {ext2.error_bound:.3g})", RuntimeWarning, stacklevel=2)
    return ext2.value - shift, ext2.certificate


def had_min(w: TTTensor, cfg: IterationConfig | None = None, rel_tol: float = 1e-6):
    value, cert = had_max(tt_scale(w, -1.0), cfg, rel_tol)
    return -value, cert


def _require_nonneg(w: TTTensor, cfg: IterationConfig, strict: bool, what: str):
    mag = had_norm_inf(w, cfg)
    if mag == 0:
        if strict:
            raise DomainError(f"{what} needs positive entries, got the zero tensor")
        return mag
    lo, _ = had_min(w, cfg)
    slack = 10 * cfg.trunc.epsilon * mag
    if (strict and lo <= 0) or lo < -slack:
        raise DomainError(f"{what} needs {'positive' if strict else 'non-negative'} entries, min is {lo:.3g}")
    return mag


# powers and inverses -----------------------------------------------------------

def had_inverse(w: TTTensor, cfg: IterationConfig | None = None, trace=None) -> IterationResult:
    """Entrywise (pseudo-)inverse by Newton's iteration ``v <- v (2 - w v)``.

    Starts at ``alpha * w`` with ``alpha = 0.9 / max|w|**2`` so that
    ``|1 - alpha w^2| < 1``; zero entries stay zero.
    """
    cfg = cfg or IterationConfig()
    if w.field != "real":
        raise ValueError("had_inverse expects a real tensor")
    mag = had_norm_inf(w, cfg)
    if mag == 0:
        return IterationResult(w, 0, True, 0.0, w.max_rank)
    alpha = _scaling(cfg, 0.9 / mag**2)
    rnd = lambda x: tt_round(x, cfg.trunc)

    def psi(v):
        # v (2 - w v), written without the constant tensor
        return tt_sub(tt_scale(v, 2.0), _mul(v, _mul(w, v, cfg), cfg))

    return iterate_truncated(psi, tt_scale(w, alpha), cfg, trace)


def had_pow(w: TTTensor, m: int, cfg: IterationConfig | None = None) -> TTTensor:
    """``w**m`` by square-and-multiply with rounding after each product;
    negative ``m`` inverts first."""
    cfg = cfg or IterationConfig()
    m = int(m)
    if m == 0:
        return tt_ones(w.modes)
    x = w if m > 0 else had_inverse(w, cfg).value
    n = abs(m)
    result = None
    while n > 0:
        if n % 2:
            result = x if result is None else _mul(result, x, cfg)
            n -= 1
        else:
            x = _mul(x, x, cfg)
            n //= 2
    return result


def had_sqrt_pair(w: TTTensor, cfg: IterationConfig | None = None, trace=None, check: bool = True,
                  inverse: bool = True):
    """``(sqrt(w), 1/sqrt(w))`` by the coupled inversion-free Newton-Schulz
    iteration ``A = 3 - z y``, ``y <- y A / 2``, ``z <- A z / 2`` started at
    ``(alpha w, 1)`` with ``alpha = 0.9 / max(w)``.

    The product ``e = z y`` is carried instead of being recomputed, which
    gives the same iterates without adding constant tensors to a possibly
    very concentrated one::

        y <- 1.5 y - 0.5 y e
        z <- 1.5 z - 0.5 z e
        e <- 2.25 e - 1.5 e^2 + 0.25 e^3

    Convergence is monitored on ``y``; ``z`` grows without bound at zero
    entries of ``w``.  With ``inverse=False`` ``z`` is not formed and the
    second result is ``None``.
    """
    cfg = cfg or IterationConfig()
    mag = _require_nonneg(w, cfg, False, "sqrt") if check else had_norm_inf(w, cfg)
    if mag == 0:
        z = IterationResult(w, 0, True, 0.0, w.max_rank)
        return z, (z if inverse else None)
    alpha = _scaling(cfg, 0.9 / mag)

    def psi(state):
        y, e = state[0], state[1]
        e2 = _mul(e, e, cfg)
        new_e = tt_add(tt_sub(tt_scale(e, 2.25), tt_scale(e2, 1.5)), tt_scale(_mul(e2, e, cfg), 0.25))
        out = (tt_sub(tt_scale(y, 1.5), tt_scale(_mul(y, e, cfg), 0.5)), new_e)
        if inverse:
            z = state[2]
            out += (tt_sub(tt_scale(z, 1.5), tt_scale(_mul(z, e, cfg), 0.5)),)
        return out

    y0 = tt_scale(w, alpha)
    start = (y0, y0, tt_ones(w.modes)) if inverse else (y0, y0)
    res = iterate_truncated(psi, start, cfg, trace, monitor=(0,))
    state = res.extra["state"]
    common = dict(iterations=res.iterations, converged=res.converged,
                  final_step_norm=res.final_step_norm, max_rank_seen=res.max_rank_seen,
                  history=res.history)
    root = IterationResult(tt_scale(state[0], 1.0 / math.sqrt(alpha)), **common)
    if not inverse:
        return root, None
    return root, IterationResult(tt_scale(state[2], math.sqrt(alpha)), **common)


def had_mroot(w: TTTensor, m: int, cfg: IterationConfig | None = None, method: str = "coupled",
              trace=None) -> IterationResult:
    """Entrywise ``w**(1/m)`` for ``w >= 0``.

    ``coupled``: inverse-root Newton pair ``A = ((m+1) - z)/m``,
    ``y <- y A``, ``z <- A**m z`` from ``(alpha, alpha**m w)``; ``y`` tends to
    ``w**(-1/m)`` (exposed as ``extra["inverse_root"]``) and ``z`` to one.
    ``tsai``: ``B = (2 + (m-2) y) / (1 + (m-1) y)``, ``y <- y B**m``,
    ``z <- z B`` from ``(w, 1)``.  ``y / z**m = w`` is invariant and ``y``
    tends to one, so ``z`` tends to ``w**(-1/m)``; the root is again
    ``w z**(m-1)``.
    ``newton``: ``v <- ((m-1) v + v**(1-m) w) / m`` from ``v = w``.
    """
    cfg = cfg or IterationConfig()
    m = int(m)
    if m < 1:
        raise ValueError("m must be a positive integer")
    mag = _require_nonneg(w, cfg, method == "coupled", f"{m}-th root")
    if m == 1:
        return IterationResult(w, 0, True, 0.0, w.max_rank)
    rnd = lambda x: tt_round(x, cfg.trunc)
    modes = w.modes

    if method == "coupled":
        alpha = _scaling(cfg, (0.9 * math.sqrt(2.0) / mag) ** (1.0 / m))

        def psi(state):
            y, z = state
            a = rnd(_affine((m + 1) / m, z, -1.0 / m))
            return _mul(y, a, cfg), _mul(had_pow(a, m, cfg), z, cfg)

        res = iterate_truncated(psi, (_const(modes, alpha), tt_scale(w, alpha**m)), cfg, trace)
        y = res.extra["state"][0]
        res.extra["inverse_root"] = y
        res.value = _mul(w, had_pow(y, m - 1, cfg), cfg)
        return res

    if method == "tsai":
        def psi(state):
            y, z = state
            num = _affine(2.0, y, m - 2.0)
            den = rnd(_affine(1.0, y, m - 1.0))
            b = _mul(num, had_inverse(den, cfg).value, cfg)
            return _mul(y, had_pow(b, m, cfg), cfg), _mul(z, b, cfg)

        res = iterate_truncated(psi, (w, tt_ones(modes)), cfg, trace)
        z = res.extra["state"][1]
        res.extra["inverse_root"] = z
        res.value = _mul(w, had_pow(z, m - 1, cfg), cfg)
        return res

    if method == "newton":
        def psi(v):
            return tt_scale(tt_add(tt_scale(v, m - 1.0), _mul(had_pow(v, 1 - m, cfg), w, cfg)), 1.0 / m)

        return iterate_truncated(psi, w, cfg, trace)

    raise ValueError(f"unknown method {method!r}")


# sign family -------------------------------------------------------------------

def had_sign(w: TTTensor, cfg: IterationConfig | None = None, method: str = "newton_schulz",
             floor: float = 1e-8, trace=None) -> IterationResult:
    """Entrywise sign.

    ``newton_schulz`` iterates ``v <- v (3 - v^2) / 2`` from ``w / max|w|``.
    Entries of relative size ``floor`` need about ``log(1/floor)/log(1.5)``
    steps, so ``max_iter`` is raised to cover the dead band; entries below it
    show up as a non-converged result.  ``newton`` iterates
    ``v <- (mu v + v^{-1}/mu) / 2`` with ``mu = sqrt(max|v^{-1}| / max|v|)``.
    """
    cfg = cfg or IterationConfig()
    mag = had_norm_inf(w, cfg)
    if mag == 0:
        return IterationResult(w, 0, True, 0.0, w.max_rank)
    rnd = lambda x: tt_round(x, cfg.trunc)
    need = int(math.ceil(math.log(1.0 / floor) / math.log(1.5))) + 10
    run_cfg = IterationConfig(cfg.tol, max(cfg.max_iter, need), cfg.trunc, cfg.scaling)

    if method == "newton_schulz":
        alpha = _scaling(cfg, 1.0 / mag)

        def psi(v):
            # v (3 - v^2) / 2
            return tt_sub(tt_scale(v, 1.5), tt_scale(_mul(v, _mul(v, v, cfg), cfg), 0.5))

        res = iterate_truncated(psi, tt_scale(w, alpha), run_cfg, trace)
    elif method == "newton":
        def psi(v):
            inv = had_inverse(v, cfg).value
            mu = math.sqrt(had_norm_inf(inv, cfg) / had_norm_inf(v, cfg))
            return tt_scale(tt_add(tt_scale(v, mu), tt_scale(inv, 1.0 / mu)), 0.5)

        res = iterate_truncated(psi, w, run_cfg, trace)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not res.converged:
        warnings.warn("sign iteration did not converge; entries inside the dead band "
                      f"(|w| < {floor:g} max|w|) are ambiguous", RuntimeWarning, stacklevel=2)
    return res


def had_abs(w: TTTensor, cfg: IterationConfig | None = None, **kw) -> TTTensor:
    cfg = cfg or IterationConfig()
    s = had_sign(w, cfg, **kw).value
    return _mul(w, s, cfg)


def _interval(interval):
    a, b = interval
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if not a < b:
        raise ValueError(f"empty interval ({a}, {b})")
    if math.isinf(a) and math.isinf(b):
        raise ValueError("interval must have at least one finite end")
    return a, b


def had_characteristic(w: TTTensor, interval, cfg: IterationConfig | None = None, **kw) -> TTTensor:
    """Indicator of ``a < w < b`` from shifted signs; ``interval = (a, b)``
    with ``None`` (or an infinity) for an open end."""
    cfg = cfg or IterationConfig()
    a, b = _interval(interval)
    modes = w.modes

    def sgn_shift(c):
        return had_sign(tt_round(_affine(c, w, -1.0), cfg.trunc), cfg, **kw).value

    if math.isinf(a):
        chi = _affine(0.5, sgn_shift(b), 0.5)
    elif math.isinf(b):
        chi = _affine(0.5, sgn_shift(a), -0.5)
    else:
        chi = tt_scale(tt_sub(sgn_shift(b), sgn_shift(a)), 0.5)
    return tt_round(chi, cfg.trunc)


def had_levelset(w: TTTensor, interval, cfg: IterationConfig | None = None, **kw) -> TTTensor:
    """``chi_I(w) * w``: entries inside the interval kept, the rest zeroed."""
    cfg = cfg or IterationConfig()
    chi = had_characteristic(w, interval, cfg, **kw)
    return _mul(chi, w, cfg)


# series --------------------------------------------------------------------------

def _sum_series(first: TTTensor, next_term, cfg: IterationConfig, coeff):
    """Accumulate ``sum_k coeff(k) * t_k`` with ``t_{k+1} = next_term(t_k)``."""
    rnd = lambda x: tt_round(x, cfg.trunc)
    term = first
    acc = rnd(tt_scale(term, coeff(0)))
    max_rank = acc.max_rank
    k = 0
    ratio = math.inf
    history = []
    converged = False
    for k in range(1, cfg.max_iter + 1):
        term = rnd(next_term(term))
        piece = tt_scale(term, coeff(k))
        acc = rnd(tt_add(acc, piece))
        if not _finite(acc):
            raise DivergenceError(f"series overflow at term {k}", k, max_rank)
        max_rank = max(max_rank, acc.max_rank, term.max_rank)
        pn, an = tt_norm(piece), tt_norm(acc)
        ratio = pn / an if an > 0 else pn
        history.append(ratio)
        if ratio <= cfg.tol or pn == 0:
            converged = True
            break
    return IterationResult(acc, k, converged, ratio, max_rank, history=history)


def had_log(w: TTTensor, cfg: IterationConfig | None = None, method: str = "gregory") -> IterationResult:
    """Entrywise natural logarithm of a positive tensor.

    ``gregory``: ``log w = -2 sum_k z^(2k+1) / (2k+1)`` with
    ``z = (1 - cw) / (1 + cw)``, minus ``log c``.  The scale
    ``c = 1/sqrt(min w * max w)`` centres the values on one so that
    ``|z| <= (sqrt(k) - 1)/(sqrt(k) + 1)`` with ``k = max w / min w``.  ``taylor``: take ``k`` square roots until
    ``w^(1/2^k)`` is within 1/4 of one, sum ``-sum x^n / n`` with
    ``x = 1 - w^(1/2^k)`` and multiply by ``2^k``.
    """
    cfg = cfg or IterationConfig()
    _require_nonneg(w, cfg, True, "log")
    rnd = lambda x: tt_round(x, cfg.trunc)
    modes = w.modes
    if method == "gregory":
        hi, _ = had_max(w, cfg)
        lo, _ = had_min(w, cfg)
        c = 1.0 / math.sqrt(hi * lo) if lo > 0 else 1.0 / hi
        cw = tt_scale(w, c)
        inv = had_inverse(rnd(_affine(1.0, cw, 1.0)), cfg)
        z = _mul(_affine(1.0, cw, -1.0), inv.value, cfg)
        z2 = _mul(z, z, cfg)
        res = _sum_series(z, lambda t: _mul(t, z2, cfg), cfg, lambda k: -2.0 / (2 * k + 1))
        res.value = rnd(tt_sub(res.value, _const(modes, math.log(c))))
        res.max_rank_seen = max(res.max_rank_seen, inv.max_rank_seen)
        res.extra["scale"] = c
        return res
    if method == "taylor":
        hi, _ = had_max(w, cfg)
        lo, _ = had_min(w, cfg)
        k = 0
        while max(abs(1 - lo ** (0.5**k)), abs(1 - hi ** (0.5**k))) > 0.25:
            k += 1
        root = w
        for _ in range(k):
            root = had_sqrt_pair(root, cfg, check=False)[0].value
        x = rnd(_affine(1.0, root, -1.0))
        res = _sum_series(x, lambda t: _mul(t, x, cfg), cfg, lambda j: -(2.0**k) / (j + 1))
        res.extra["root_steps"] = k
        return res
    raise ValueError(f"unknown method {method!r}")


def had_exp(w: TTTensor, cfg: IterationConfig | None = None) -> IterationResult:
    """Entrywise exponential: Taylor series of ``w / s`` then ``log2(s)``
    squarings, ``s`` the smallest power of two >= ``max|w|``."""
    cfg = cfg or IterationConfig()
    if w.field != "real":
        raise ValueError("had_exp expects a real tensor")
    mag = had_norm_inf(w, cfg)
    if mag > 700:
        raise DivergenceError(f"exp overflows: max|w| = {mag:.3g}")
    k = max(0, math.ceil(math.log2(mag))) if mag > 0 else 0
    s = 2.0**k
    x = tt_scale(w, 1.0 / s)
    # term_j = x^j / j!, the counter lives in the closure
    counter = [0]

    def next_term(t):
        counter[0] += 1
        return tt_scale(_mul(t, x, cfg), 1.0 / counter[0])

    res = _sum_series(tt_ones(w.modes), next_term, cfg, lambda j: 1.0)
    u = res.value
    for _ in range(k):
        u = _mul(u, u, cfg)
        res.max_rank_seen = max(res.max_rank_seen, u.max_rank)
    res.value = u
    res.extra["squarings"] = k
    return res
