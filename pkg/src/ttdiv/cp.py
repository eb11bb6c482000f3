"""Canonical polyadic (CP) tensors: a sum of R rank-one terms.

Used for construction and cross-validation only; there is no CP rank
reduction.
"""

from __future__ import annotations

import numpy as np

from .tt import TTTensor


class CPTensor:
    """``w = sum_j outer(factors[j][0], ..., factors[j][d-1])``.

    ``factors`` is stored as a list of ``d`` matrices, matrix ``k`` of shape
    ``(R, n_k)`` whose row ``j`` is the ``k``-th factor of term ``j``.
    """

    __slots__ = ("_mats",)

    def __init__(self, mats):
        mats = [np.array(m) for m in mats]
        if not mats:
            raise ValueError("need at least one mode")
        dtype = np.result_type(*[m.dtype for m in mats], np.float64)
        R = mats[0].shape[0]
        for k, m in enumerate(mats):
            if m.ndim != 2 or m.shape[0] != R or m.shape[1] < 1:
                raise ValueError(f"factor matrix {k} has bad shape {m.shape}")
        if R < 1:
            raise ValueError("CP rank must be >= 1")
        stored = []
        for m in mats:
            m = m.astype(dtype)
            m.setflags(write=False)
            stored.append(m)
        self._mats = tuple(stored)

    @classmethod
    def from_terms(cls, terms):
        """Build from a list of R terms, each a list of d vectors."""
        d = len(terms[0])
        return cls([np.stack([t[k] for t in terms]) for k in range(d)])

    @property
    def mats(self):
        return self._mats

    @property
    def rank(self) -> int:
        return self._mats[0].shape[0]

    @property
    def d(self) -> int:
        return len(self._mats)

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self._mats)

    def full(self) -> np.ndarray:
        out = self._mats[0]
        for m in self._mats[1:]:
            out = np.einsum("ra,rb->rab", out, m).reshape(self.rank, -1)
        return out.sum(axis=0).reshape(self.modes)

    def __repr__(self):
        return f"CPTensor(modes={self.modes}, rank={self.rank})"


def _check(u: CPTensor, v: CPTensor):
    if u.modes != v.modes:
        raise ValueError(f"mode mismatch: {u.modes} vs {v.modes}")


def cp_scale(w: CPTensor, alpha) -> CPTensor:
    # balance |alpha|^(1/d) over the modes, sign on the first
    d = w.d
    mag = abs(alpha)
    root = mag ** (1.0 / d)
    phase = alpha / mag if mag != 0 else 0.0
    mats = [m * root for m in w.mats]
    mats[0] = mats[0] * phase
    return CPTensor(mats)


def cp_add(u: CPTensor, v: CPTensor) -> CPTensor:
    _check(u, v)
    return CPTensor([np.concatenate([a, b], axis=0) for a, b in zip(u.mats, v.mats)])


def cp_hadamard(u: CPTensor, v: CPTensor) -> CPTensor:
    _check(u, v)
    mats = []
    for a, b in zip(u.mats, v.mats):
        mats.append(np.einsum("ri,si->rsi", a, b).reshape(-1, a.shape[1]))
    return CPTensor(mats)


def cp_inner(u: CPTensor, v: CPTensor):
    """``sum(u * conj(v))`` from the R_u x R_v Gram matrices of each mode."""
    _check(u, v)
    g = np.ones((u.rank, v.rank), dtype=np.result_type(u.mats[0], v.mats[0]))
    for a, b in zip(u.mats, v.mats):
        g = g * (a @ b.conj().T)
    val = g.sum()
    return val if np.iscomplexobj(val) else float(val)


def cp_to_tt(w: CPTensor) -> TTTensor:
    """Exact embedding with all interior TT ranks equal to R."""
    R, d = w.rank, w.d
    if d == 1:
        return TTTensor([w.mats[0].sum(axis=0).reshape(1, -1, 1)])
    cores = [w.mats[0].T.reshape(1, -1, R)]
    for m in w.mats[1:-1]:
        n = m.shape[1]
        c = np.zeros((R, n, R), dtype=m.dtype)
        c[np.arange(R), :, np.arange(R)] = m
        cores.append(c)
    cores.append(w.mats[-1].reshape(R, -1, 1))
    return TTTensor(cores)
