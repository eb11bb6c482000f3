"""Brute-force full-tensor reference implementations.

Deliberately naive: every quantity is computed on the full ``numpy`` array.
These are the ground truth the TT code is tested against, so nothing here
calls into the TT algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .tt import TTTensor

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class DenseTensor:
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def modes(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.data) else "real"


def dense_from_tt(w: TTTensor, cap: int = DEFAULT_CAP) -> DenseTensor:
    """Full contraction of the cores (refuses tensors with more than ``cap`` entries)."""
    if w.size > cap:
        raise MemoryError(f"tensor has {w.size} entries, cap is {cap}")
    out = np.ones((1, 1), dtype=w.dtype)
    for c in w.cores:
        out = np.einsum("ma,aib->mib", out, c).reshape(-1, c.shape[2])
    return DenseTensor(out.reshape(w.modes))


def _coerce(w) -> np.ndarray:
    return w.data if isinstance(w, DenseTensor) else np.asarray(w)


def dense_pointwise(w, f: Callable[[np.ndarray], np.ndarray]) -> DenseTensor:
    """Apply ``f`` entrywise; a non-finite result at a finite input raises
    :class:`DomainError` naming the first offending multi-index."""
    x = _coerce(w)
    with np.errstate(all="ignore"):
        y = np.asarray(f(x))
    bad = ~np.isfinite(y) & np.isfinite(x)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"function undefined at index {idx} (value {x[idx]!r})", idx)
    return DenseTensor(y)


def dense_reduce(w, kind: str, other=None):
    x = _coerce(w)
    if kind == "sum":
        return x.sum()
    if kind == "max":
        return x.max()
    if kind == "min":
        return x.min()
    if kind == "dot":
        y = _coerce(other)
        if y.shape != x.shape:
            raise ValueError(f"mode mismatch: {x.shape} vs {y.shape}")
        return np.sum(x * np.conj(y))
    raise ValueError(f"unknown reduction {kind!r}")


# algebra --------------------------------------------------------------------

def dense_scale(w, alpha):
    return DenseTensor(alpha * _coerce(w))


def dense_add(u, v):
    return DenseTensor(_coerce(u) + _coerce(v))


def dense_hadamard(u, v):
    return DenseTensor(_coerce(u) * _coerce(v))


def dense_inner(u, v):
    return dense_reduce(u, "dot", v)


def dense_norm(w):
    return float(np.linalg.norm(_coerce(w).ravel()))


def dense_outer(factors) -> np.ndarray:
    out = np.ones(())
    for f in factors:
        out = np.multiply.outer(out, np.asarray(f))
    return out


# integrals and divergences (cell weight = grid spacing product) --------------

def dense_integral(p, cell: float):
    return cell * _coerce(p).sum()


def dense_expectation(f, p, cell: float):
    return cell * np.sum(_coerce(f) * _coerce(p))


def _log_masked(x, floor):
    out = np.zeros_like(x, dtype=float)
    m = x > floor
    out[m] = np.log(x[m])
    return out, m


def dense_entropy(p, cell: float, floor: float = 1e-30):
    x = _coerce(p)
    lg, m = _log_masked(x, floor)
    return -cell * np.sum(np.where(m, x * lg, 0.0))


def dense_kl(p, q, cell: float, floor: float = 1e-30):
    x, y = _coerce(p), _coerce(q)
    m = (x > floor) & (y > floor)
    return cell * np.sum(np.where(m, x * (np.log(np.where(m, x, 1)) - np.log(np.where(m, y, 1))), 0.0))


def dense_hellinger_sq(p, q, cell: float):
    x, y = _coerce(p), _coerce(q)
    return 0.5 * cell * np.sum((np.sqrt(np.maximum(x, 0)) - np.sqrt(np.maximum(y, 0))) ** 2)


def dense_bhattacharyya(p, q, cell: float):
    x, y = _coerce(p), _coerce(q)
    return -math.log(cell * np.sum(np.sqrt(np.maximum(x, 0) * np.maximum(y, 0))))


def dense_f_divergence(p, q, f: Callable[[np.ndarray], np.ndarray], cell: float, floor: float = 1e-30):
    x, y = _coerce(p), _coerce(q)
    m = y > floor
    t = np.where(m, x / np.where(m, y, 1), 1.0)
    with np.errstate(all="ignore"):
        ft = f(t)
    return cell * np.sum(np.where(m, ft * y, 0.0))
