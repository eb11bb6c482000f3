"""Maximum-volume row selection and TT-cross interpolation of black-box tensors.

``tt_cross`` runs alternating left/right sweeps.  Each sweep evaluates the
function on the fibres ``(left index set, all i_k, right index set)``,
orthogonalises them by QR and picks the next index set with ``maxvol``.
After every full sweep the interpolant is checked on held-out random
entries; if the error is above tolerance all interior ranks grow by
``rank_step`` (new index sets padded with random indices) and the sweep is
repeated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .tt import TruncationConfig, TTTensor, tt_elements, tt_round


@dataclass
class MaxvolResult:
    row_indices: np.ndarray
    volume: float
    swaps: int
    coefficients: np.ndarray = field(repr=False, default=None)


def maxvol(A: np.ndarray, delta: float = 0.01, max_swaps: int | None = None) -> MaxvolResult:
    """Rows of the ``n x r`` matrix ``A`` spanning a locally maximal-volume
    ``r x r`` submatrix.

    Starts from the pivots of a column-pivoted QR of ``A^T`` and swaps one
    row at a time while some coefficient of ``A @ inv(A[rows])`` exceeds
    ``1 + delta`` in modulus.  Each swap multiplies ``|det|`` by that
    coefficient, so the loop terminates.  Ties go to the lowest index.
    """
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    n, r = A.shape
    if n < r:
        raise ValueError(f"need at least as many rows as columns, got {A.shape}")
    if r == 0:
        return MaxvolResult(np.zeros(0, dtype=int), 1.0, 0, np.zeros((n, 0)))
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[-1] <= max(n, r) * np.finfo(float).eps * diag[0] or diag[0] == 0:
        raise np.linalg.LinAlgError("matrix is rank deficient")
    rows = np.array(piv[:r])
    B = np.linalg.solve(A[rows].T, A.T).T
    limit = max_swaps if max_swaps is not None else 100 * r + n
    swaps = 0
    while True:
        flat = int(np.argmax(np.abs(B)))
        i, j = divmod(flat, r)
        piv_val = B[i, j]
        if abs(piv_val) <= 1.0 + delta or swaps >= limit:
            break
        # rank-one update of the coefficient matrix for swapping rows[j] -> i
        col = B[:, j].copy()
        row = B[i, :].copy()
        row[j] -= 1.0
        B -= np.outer(col, row) / piv_val
        rows[j] = i
        swaps += 1
    volume = float(abs(np.linalg.det(A[rows])))
    return MaxvolResult(rows, volume, swaps, B)


def skeleton(A: np.ndarray, r: int, delta: float = 0.01, n_alt: int = 6, seed: int = 0):
    """Cross approximation ``A[:, J] inv(A[I, J]) A[I, :]`` with ``(I, J)``
    found by alternating maxvol on columns and rows.

    Returns ``(rows, cols, approx)``.
    """
    A = np.asarray(A)
    m, n = A.shape
    rng = np.random.default_rng(seed)
    cols = np.sort(rng.choice(n, r, replace=False))
    rows = None
    for _ in range(n_alt):
        new_rows = maxvol(A[:, cols], delta).row_indices
        new_cols = maxvol(A[new_rows, :].T, delta).row_indices
        if rows is not None and set(new_rows) == set(rows) and set(new_cols) == set(cols):
            break
        rows, cols = new_rows, new_cols
    core = A[np.ix_(rows, cols)]
    approx = A[:, cols] @ np.linalg.solve(core, A[rows, :])
    return rows, cols, approx


@dataclass(frozen=True)
class CrossConfig:
    """Settings for :func:`tt_cross`.

    ``tol`` is the target of ``max|f - g| / max|f|`` over held-out random
    entries (the scale also includes every value seen while sweeping).
    The result is rounded at ``round_eps`` (default ``tol/100``) at the end.
    """

    tol: float = 1e-6
    max_rank: int = 100
    rank_step: int = 4
    n_validation_samples: int = 1000
    seed: int = 0
    initial_rank: int = 2
    sweeps_per_rank: int = 1
    delta: float = 0.01
    round_eps: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rank_step < 1:
            raise ValueError("rank_step must be >= 1")
        if self.max_rank < 1 or self.initial_rank < 1:
            raise ValueError("ranks must be >= 1")
        if self.n_validation_samples < 1:
            raise ValueError("need at least one validation sample")


@dataclass
class CrossInfo:
    converged: bool
    validation_error: float
    max_rank: int
    sweeps: int
    n_evals: int
    history: list = field(default_factory=list)


class _Evaluator:
    """Counts evaluations and tracks the largest modulus seen."""

    def __init__(self, f, d):
        self.f = f
        self.d = d
        self.n_evals = 0
        self.scale = 0.0
        self.structured = hasattr(f, "fibers")

    def _track(self, vals):
        vals = np.asarray(vals)
        if vals.size:
            if not np.all(np.isfinite(vals)):
                raise ValueError("function returned non-finite values")
            self.scale = max(self.scale, float(np.max(np.abs(vals))))
        self.n_evals += vals.size
        return vals

    def points(self, idx):
        return self._track(np.asarray(self.f(idx)).reshape(-1))

    def fibers(self, left, k, n_k, right):
        if self.structured:
            return self._track(self.f.fibers(left, k, right))
        rl, rr = left.shape[0], right.shape[0]
        L = np.repeat(left, n_k * rr, axis=0)
        I = np.tile(np.repeat(np.arange(n_k), rr), rl)[:, None]
        R = np.tile(right, (rl * n_k, 1))
        idx = np.hstack([L, I, R]).astype(int)
        return self.points(idx).reshape(rl, n_k, rr)


def _random_rows(rng, modes, count, exclude=None):
    """``count`` distinct random multi-indices over ``modes`` not in ``exclude``."""
    modes = tuple(modes)
    total = math.prod(modes)
    taken = set(map(tuple, exclude)) if exclude is not None else set()
    count = min(count, total - len(taken))
    out = []
    if total <= 4 * (count + len(taken)) or total < 10_000:
        for flat in rng.permutation(total):
            t = tuple(int(x) for x in np.unravel_index(flat, modes)) if modes else ()
            if t not in taken:
                out.append(t)
                taken.add(t)
                if len(out) == count:
                    break
    else:
        while len(out) < count:
            t = tuple(int(rng.integers(n)) for n in modes)
            if t not in taken:
                out.append(t)
                taken.add(t)
    return np.array(out, dtype=int).reshape(len(out), len(modes))


def _bond_ranks(modes, r):
    d = len(modes)
    ranks = [1]
    for k in range(1, d):
        ranks.append(min(r, math.prod(modes[:k]), math.prod(modes[k:])))
    ranks.append(1)
    return ranks


def _pad(rng, rows, modes, size):
    if rows.shape[0] >= size:
        return rows[:size]
    extra = _random_rows(rng, modes, size - rows.shape[0], exclude=rows)
    return np.vstack([rows, extra])


def tt_cross(f, modes: Sequence[int], cfg: CrossConfig | None = None, return_info: bool = False,
             start=None):
    """TT interpolation of the tensor ``i -> f(i)``.

    ``f`` takes an ``(m, d)`` integer array of multi-indices and returns ``m``
    values.  Objects with a ``fibers(left, k, right)`` method (see
    :class:`TTFunction`) are evaluated fibre-wise instead.  A result that
    misses ``cfg.tol`` at ``cfg.max_rank`` is returned with a warning; pass
    ``return_info=True`` to get the diagnostics as well.

    ``start`` lists multi-indices (e.g. the location of a peak) that seed the
    initial index sets; without it they are random, which can miss a function
    concentrated on a few entries entirely.
    """
    cfg = cfg or CrossConfig()
    modes = tuple(int(n) for n in modes)
    d = len(modes)
    rng = np.random.default_rng(cfg.seed)
    ev = _Evaluator(f, d)

    val_idx = np.column_stack([rng.integers(n, size=cfg.n_validation_samples) for n in modes])
    val_f = ev.points(val_idx)
    complex_out = np.iscomplexobj(val_f)

    if d == 1:
        vals = ev.points(np.arange(modes[0])[:, None])
        tt = TTTensor([vals.reshape(1, -1, 1)])
        info = CrossInfo(True, 0.0, 1, 0, ev.n_evals)
        return (tt, info) if return_info else tt

    r = min(cfg.initial_rank, cfg.max_rank)
    ranks = _bond_ranks(modes, r)
    # right[k]: indices of positions k..d-1 for bond k (k = 1..d-1)
    right = [None] + [_random_rows(rng, modes[k:], ranks[k]) for k in range(1, d)] + [np.zeros((1, 0), int)]
    if start is not None:
        start = np.atleast_2d(np.asarray(start, dtype=int))
        if start.shape[1] != d or np.any(start < 0) or np.any(start >= np.asarray(modes)):
            raise ValueError("start indices do not fit the modes")
        for k in range(1, d):
            seeds = np.unique(start[:, k:], axis=0)[: ranks[k]]
            right[k] = _pad(rng, seeds, modes[k:], ranks[k])
    left = [np.zeros((1, 0), int)] + [None] * d
    history = []
    sweeps = 0
    err = math.inf
    tt = None
    while True:
        for _ in range(cfg.sweeps_per_rank):
            # left-to-right
            cores = [None] * d
            for k in range(d - 1):
                C = ev.fibers(left[k], k, modes[k], right[k + 1])
                rl, n, rr = C.shape
                Q, _ = np.linalg.qr(C.reshape(rl * n, rr))
                mv = maxvol(Q, cfg.delta)
                rows = mv.row_indices
                a, i = np.divmod(rows, n)
                left[k + 1] = np.hstack([left[k][a], i[:, None]])
                cores[k] = mv.coefficients.reshape(rl, n, rr)
            cores[d - 1] = ev.fibers(left[d - 1], d - 1, modes[d - 1], right[d])
            # right-to-left
            for k in range(d - 1, 0, -1):
                C = ev.fibers(left[k], k, modes[k], right[k + 1])
                rl, n, rr = C.shape
                Q, _ = np.linalg.qr(C.reshape(rl, n * rr).T)
                mv = maxvol(Q, cfg.delta)
                rows = mv.row_indices
                i, b = np.divmod(rows, rr)
                right[k] = np.hstack([i[:, None], right[k + 1][b]])
                cores[k] = mv.coefficients.T.reshape(rl, n, rr)
            cores[0] = ev.fibers(left[0], 0, modes[0], right[1])
            sweeps += 1
        tt = TTTensor(cores)
        approx = tt_elements(tt, val_idx)
        scale = max(ev.scale, 1e-300)
        err = float(np.max(np.abs(approx - val_f))) / scale
        history.append({"rank": max(ranks), "validation_error": err, "n_evals": ev.n_evals})
        if err <= cfg.tol or r >= cfg.max_rank:
            break
        new_r = min(r + cfg.rank_step, cfg.max_rank)
        new_ranks = _bond_ranks(modes, new_r)
        if new_ranks == ranks:
            break
        r, ranks = new_r, new_ranks
        for k in range(1, d):
            right[k] = _pad(rng, right[k], modes[k:], ranks[k])

    round_eps = cfg.round_eps if cfg.round_eps is not None else cfg.tol / 100
    tt = tt_round(tt, TruncationConfig(round_eps))
    if round_eps > 0:
        err = max(err, float(np.max(np.abs(tt_elements(tt, val_idx) - val_f))) / max(ev.scale, 1e-300))
    converged = err <= cfg.tol
    if not complex_out and tt.field == "complex":
        tt = TTTensor([c.real for c in tt.cores])
    info = CrossInfo(converged, err, tt.max_rank, sweeps, ev.n_evals, history)
    if not converged:
        warnings.warn(f"tt_cross stopped at rank {max(ranks)} with validation error {err:.3g} "
                      f"(target {cfg.tol:g})", RuntimeWarning, stacklevel=2)
    return (tt, info) if return_info else tt


class TTFunction:
    """Entrywise ``g(w1, w2, ...)`` of TT tensors, evaluated fibre-wise.

    Left and right partial contractions of each tensor at the index sets are
    formed once per call, so a fibre costs ``O(r_cross * n * R^2)`` instead of
    ``O(d R^2)`` per entry.
    """

    def __init__(self, g: Callable, tensors):
        if isinstance(tensors, TTTensor):
            tensors = (tensors,)
        self.g = g
        self.tensors = tuple(tensors)
        modes = {t.modes for t in self.tensors}
        if len(modes) != 1:
            raise ValueError("all tensors must share the same modes")
        self.modes = self.tensors[0].modes

    def __call__(self, idx):
        return self.g(*[tt_elements(t, idx) for t in self.tensors])

    @staticmethod
    def _left(t, left):
        out = np.ones((left.shape[0], 1), dtype=t.dtype)
        for k in range(left.shape[1]):
            out = np.einsum("ma,amb->mb", out, t.cores[k][:, left[:, k], :])
        return out

    @staticmethod
    def _right(t, right, start):
        out = np.ones((right.shape[0], 1), dtype=t.dtype)
        for j in range(right.shape[1] - 1, -1, -1):
            core = t.cores[start + j]
            out = np.einsum("amb,mb->ma", core[:, right[:, j], :], out)
        return out

    def fibers(self, left, k, right):
        vals = []
        for t in self.tensors:
            L = self._left(t, left)
            R = self._right(t, right, k + 1)
            vals.append(np.einsum("la,aib,rb->lir", L, t.cores[k], R, optimize=True))
        return np.asarray(self.g(*vals))


def apply_via_cross(g: Callable, w, cfg: CrossConfig | None = None, return_info: bool = False):
    """TT approximation of the entrywise ``g(w)`` (or ``g(w1, w2, ...)`` when
    ``w`` is a sequence of tensors)."""
    fn = TTFunction(g, w)
    return tt_cross(fn, fn.modes, cfg, return_info)
