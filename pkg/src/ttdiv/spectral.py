"""Tensor grids, their dual frequency grids and the per-core Fourier transform.

Spatial points per dimension are ``x_k = -a + dx*(k+1)`` for ``k = 0..n-1``
with ``dx = 2a/n``, so the origin sits at index ``c = n/2 - 1``.  The dual
grid has ``t_j = (j - c)*dt`` with ``dt = pi/a``, which gives
``dx*dt = 2*pi/n`` and places ``t = 0`` at the same index.

The pcf is ``phi(t) = E exp(i<t, x>)``.  The forward transform therefore uses
``exp(+i x t)`` and the scale ``dx``; the inverse uses ``exp(-i x t)`` and the
scale ``dt/(2 pi) = 1/(n dx)``.  Both act on the mode axis of each core, so TT
ranks never change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tt import (
    TruncationConfig,
    TTTensor,
    tt_from_rank_one_factors,
    tt_imag,
    tt_norm,
    tt_real,
    tt_round,
)


def _per_dim(value, d=None):
    if np.ndim(value) == 0:
        if d is None:
            raise ValueError("need the dimension when passing scalars")
        return (value,) * d
    return tuple(value)


@dataclass(frozen=True)
class Grid:
    """Uniform centred grid on ``[-a, a)`` shifted by one cell, per dimension."""

    a: tuple
    n: tuple

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def modes(self) -> tuple:
        return tuple(self.n)

    @property
    def dx(self) -> tuple:
        return tuple(2.0 * a / n for a, n in zip(self.a, self.n))

    @property
    def origin(self) -> tuple:
        return tuple(n // 2 - 1 for n in self.n)

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * a for a in self.a]))

    @property
    def num_points(self) -> float:
        return float(np.prod([float(n) for n in self.n]))

    @property
    def cell(self) -> float:
        """``V / N``, the quadrature weight of every grid point."""
        return float(np.prod(self.dx))

    def points(self, k: int) -> np.ndarray:
        a, n = self.a[k], self.n[k]
        return -a + (2.0 * a / n) * np.arange(1, n + 1)

    def coords(self, idx: np.ndarray) -> np.ndarray:
        """Map an ``(m, d)`` integer index array to coordinates."""
        idx = np.asarray(idx)
        dx = np.asarray(self.dx)
        return -np.asarray(self.a) + dx * (idx + 1)


@dataclass(frozen=True)
class DualGrid:
    """Frequencies ``t_j = (j - origin) * dt`` with ``dt = pi / a``."""

    a: tuple
    n: tuple

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def modes(self) -> tuple:
        return tuple(self.n)

    @property
    def dt(self) -> tuple:
        return tuple(math.pi / a for a in self.a)

    @property
    def origin(self) -> tuple:
        return tuple(n // 2 - 1 for n in self.n)

    @property
    def cell(self) -> float:
        return float(np.prod(self.dt))

    def points(self, k: int) -> np.ndarray:
        n = self.n[k]
        return (np.arange(n) - (n // 2 - 1)) * self.dt[k]

    def coords(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx)
        return (idx - np.asarray(self.origin)) * np.asarray(self.dt)

    def mirror(self, idx) -> tuple:
        """Index of ``-t`` for the index of ``t`` (periodic wrap)."""
        return tuple((2 * c - i) % n for i, c, n in zip(idx, self.origin, self.n))

    @property
    def nyquist(self) -> tuple:
        return tuple(math.pi * n / (2.0 * a) for a, n in zip(self.a, self.n))


def make_grid(a, n, d: int | None = None):
    """Paired spatial and frequency grids; ``a``/``n`` may be scalars (then
    ``d`` is required) or per-dimension sequences."""
    if np.ndim(a) and np.ndim(n) == 0:
        d = len(a)
    if np.ndim(n) and np.ndim(a) == 0:
        d = len(n)
    a = tuple(float(x) for x in _per_dim(a, d))
    n = tuple(int(x) for x in _per_dim(n, d))
    if len(a) != len(n):
        raise ValueError("a and n must have the same length")
    for x, m in zip(a, n):
        if not x > 0:
            raise ValueError(f"half-width must be positive, got {x}")
        if m < 4 or m % 2:
            raise ValueError(f"point count must be even and >= 4, got {m}")
    return Grid(a, n), DualGrid(a, n)


def eval_on_grid(f, grid, builder: str = "rank_one", cross_cfg=None) -> TTTensor:
    """Samples of ``f`` on ``grid`` (spatial or dual) as a TT tensor.

    ``rank_one``: ``f`` is a sequence of univariate callables, one per
    dimension, and the result is their outer product.  ``cross``: ``f`` maps
    an ``(m, d)`` array of points to ``m`` values and is approximated by
    TT-cross.
    """
    if builder == "rank_one":
        if callable(f):
            f = [f] * grid.d
        if len(f) != grid.d:
            raise ValueError(f"need {grid.d} factors, got {len(f)}")
        factors = []
        for k, fk in enumerate(f):
            vals = np.asarray(fk(grid.points(k)))
            bad = np.flatnonzero(~np.isfinite(vals))
            if bad.size:
                raise ValueError(f"factor {k} is not finite at grid index {int(bad[0])}")
            factors.append(vals)
        return tt_from_rank_one_factors(factors)
    if builder == "cross":
        from .cross import CrossConfig, tt_cross

        def on_index(idx):
            vals = np.asarray(f(grid.coords(idx)))
            bad = np.flatnonzero(~np.isfinite(vals))
            if bad.size:
                raise ValueError(f"function is not finite at index {tuple(int(i) for i in idx[bad[0]])}")
            return vals

        return tt_cross(on_index, grid.modes, cross_cfg or CrossConfig())
    raise ValueError(f"unknown builder {builder!r}")


def _transform_cores(w: TTTensor, per_mode: Sequence[Callable[[np.ndarray], np.ndarray]]) -> TTTensor:
    return TTTensor([fn(np.asarray(c, dtype=complex)) for c, fn in zip(w.cores, per_mode)])


def _check_modes(w: TTTensor, grid):
    if w.modes != grid.modes:
        raise ValueError(f"tensor modes {w.modes} do not match grid {grid.modes}")


def pdf_to_pcf(p: TTTensor, grid: Grid, dual: DualGrid | None = None) -> TTTensor:
    """``Phi_j = sum_k p_k exp(i x_k t_j) * cell`` on the dual grid."""
    _check_modes(p, grid)
    fns = []
    for n, dx, c in zip(grid.n, grid.dx, grid.origin):
        def fn(core, n=n, dx=dx, c=c):
            shifted = np.roll(core, -c, axis=1)
            return np.roll(np.fft.ifft(shifted, axis=1), c, axis=1) * (n * dx)
        fns.append(fn)
    return _transform_cores(p, fns)


def pcf_to_pdf_complex(phi: TTTensor, grid: Grid, dual: DualGrid | None = None) -> TTTensor:
    """Inverse of :func:`pdf_to_pcf` keeping the complex result."""
    _check_modes(phi, grid)
    fns = []
    for n, dx, c in zip(grid.n, grid.dx, grid.origin):
        def fn(core, n=n, dx=dx, c=c):
            shifted = np.roll(core, -c, axis=1)
            return np.roll(np.fft.fft(shifted, axis=1), c, axis=1) / (n * dx)
        fns.append(fn)
    return _transform_cores(phi, fns)


class ImaginaryResidualError(ValueError):
    pass


def pcf_to_pdf(phi: TTTensor, grid: Grid, dual: DualGrid | None = None, im_tol: float = 1e-8):
    """Real density tensor from pcf samples on the dual grid.

    Returns ``(P, im_residual)`` where ``im_residual = ||Im|| / ||P||``
    (Frobenius).  Raises :class:`ImaginaryResidualError` when it exceeds
    ``im_tol``.  The real and imaginary parts are taken through the real
    2x2 embedding and rounded at relative accuracy 1e-14, which brings the
    ranks of ``P`` back to at most those of ``phi``.
    """
    z = pcf_to_pdf_complex(phi, grid, dual)
    if all(np.allclose(c.imag, 0.0, atol=0.0) for c in z.cores):
        return TTTensor([c.real for c in z.cores]), 0.0
    # a real tensor has the same unfolding ranks over R as over C, so a
    # near-exact rounding brings the embedded real part back to ranks(phi)
    re = tt_round(tt_real(z), TruncationConfig(1e-14))
    im = tt_imag(z)
    nre = tt_norm(re)
    res = tt_norm(im) / nre if nre > 0 else tt_norm(im)
    if res > im_tol:
        raise ImaginaryResidualError(f"imaginary residual {res:.3g} exceeds tolerance {im_tol:g}")
    return re, res
