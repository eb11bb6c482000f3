"""Tensor-train tensors and their exact multilinear algebra.

A :class:`TTTensor` of order ``d`` stores ``d`` three-way cores, core ``k``
shaped ``(r_k, n_k, r_{k+1})`` with ``r_0 = r_d = 1``.  Element
``w[i_1, ..., i_d]`` is the product of the matrix slices ``core_k[:, i_k, :]``.

All operations return new tensors; cores are stored read-only.  ``tt_add`` and
``tt_hadamard`` are exact and never round, callers apply :func:`tt_round`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "TTTensor",
    "TruncationConfig",
    "tt_from_rank_one_factors",
    "tt_from_sum_of_factors",
    "tt_ones",
    "tt_zeros",
    "tt_random",
    "tt_from_dense",
    "tt_to_dense",
    "tt_element",
    "tt_elements",
    "tt_scale",
    "tt_add",
    "tt_sub",
    "tt_hadamard",
    "tt_inner",
    "tt_dot",
    "tt_norm",
    "tt_sum",
    "tt_conj",
    "tt_real",
    "tt_imag",
    "tt_orthogonalize",
    "tt_round",
    "tt_hadamard_round",
    "tt_to_json",
    "tt_from_json",
]


@dataclass(frozen=True)
class TruncationConfig:
    """Rounding parameters: relative Frobenius tolerance and optional rank cap."""

    epsilon: float = 1e-10
    max_rank: int | None = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError(f"max_rank must be >= 1, got {self.max_rank}")


class TTTensor:
    """Order-``d`` tensor in tensor-train format."""

    __slots__ = ("_cores",)

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = list(cores)
        if not cores:
            raise ValueError("a TT tensor needs at least one core")
        is_complex = any(np.iscomplexobj(c) for c in cores)
        dtype = np.complex128 if is_complex else np.float64
        stored = []
        for k, c in enumerate(cores):
            c = np.array(c, dtype=dtype)
            if c.ndim != 3:
                raise ValueError(f"core {k} must be 3-way, got shape {c.shape}")
            if c.shape[1] < 1 or c.shape[0] < 1 or c.shape[2] < 1:
                raise ValueError(f"core {k} has an empty dimension: {c.shape}")
            if k > 0 and stored[-1].shape[2] != c.shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {k - 1} and {k}: "
                    f"{stored[-1].shape[2]} != {c.shape[0]}"
                )
            c.setflags(write=False)
            stored.append(c)
        if stored[0].shape[0] != 1 or stored[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        self._cores = tuple(stored)

    @property
    def cores(self) -> tuple[np.ndarray, ...]:
        return self._cores

    @property
    def d(self) -> int:
        return len(self._cores)

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self._cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self._cores)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def dtype(self):
        return self._cores[0].dtype

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self._cores[0]) else "real"

    @property
    def size(self) -> int:
        """Number of entries of the full tensor (a Python int, may be huge)."""
        return math.prod(self.modes)

    @property
    def num_params(self) -> int:
        return sum(c.size for c in self._cores)

    def __repr__(self):
        return f"TTTensor(modes={self.modes}, ranks={self.ranks}, field={self.field!r})"

    def __getitem__(self, idx):
        return tt_element(self, idx)

    def full(self) -> np.ndarray:
        return tt_to_dense(self)

    def __add__(self, other):
        if isinstance(other, TTTensor):
            return tt_add(self, other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TTTensor):
            return tt_sub(self, other)
        return NotImplemented

    def __neg__(self):
        return tt_scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, TTTensor):
            return tt_hadamard(self, other)
        if np.isscalar(other):
            return tt_scale(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return tt_scale(self, 1.0 / other)
        return NotImplemented


def _check_same_modes(u: TTTensor, v: TTTensor):
    if u.modes != v.modes:
        raise ValueError(f"mode mismatch: {u.modes} vs {v.modes}")


def tt_from_rank_one_factors(factors: Sequence[np.ndarray]) -> TTTensor:
    """Rank-one tensor ``w[i_1..i_d] = prod_k factors[k][i_k]``."""
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    cores = []
    for k, f in enumerate(factors):
        f = np.asarray(f)
        if f.ndim != 1 or f.size == 0:
            raise ValueError(f"factor {k} must be a non-empty vector")
        cores.append(f.reshape(1, -1, 1))
    return TTTensor(cores)


def tt_from_sum_of_factors(factors: Sequence[np.ndarray]) -> TTTensor:
    """``w[i_1..i_d] = sum_k factors[k][i_k]`` with interior ranks 2."""
    factors = [np.asarray(f) for f in factors]
    d = len(factors)
    if d == 0:
        raise ValueError("need at least one factor")
    if d == 1:
        return tt_from_rank_one_factors(factors)
    dtype = np.result_type(*factors, np.float64)
    cores = []
    for k, f in enumerate(factors):
        n = f.size
        one = np.ones(n, dtype=dtype)
        if k == 0:
            c = np.stack([f, one], axis=-1)[None]
        elif k == d - 1:
            c = np.stack([one, f], axis=0)[..., None]
        else:
            c = np.zeros((2, n, 2), dtype=dtype)
            c[0, :, 0] = one
            c[1, :, 0] = f
            c[1, :, 1] = one
        cores.append(c)
    return TTTensor(cores)


def tt_ones(modes: Sequence[int]) -> TTTensor:
    return tt_from_rank_one_factors([np.ones(n) for n in modes])


def tt_zeros(modes: Sequence[int]) -> TTTensor:
    return tt_from_rank_one_factors([np.zeros(n) for n in modes])


def tt_random(modes, ranks, rng=None, field="real") -> TTTensor:
    """Random TT with Gaussian cores; ``ranks`` are the d-1 interior ranks
    (or the full length d+1 vector)."""
    rng = np.random.default_rng(rng)
    modes = list(modes)
    ranks = list(ranks)
    if len(ranks) == len(modes) - 1:
        ranks = [1] + ranks + [1]
    if len(ranks) != len(modes) + 1:
        raise ValueError("ranks must have length d-1 or d+1")
    cores = []
    for k, n in enumerate(modes):
        shape = (ranks[k], n, ranks[k + 1])
        c = rng.standard_normal(shape)
        if field == "complex":
            c = c + 1j * rng.standard_normal(shape)
        cores.append(c / math.sqrt(ranks[k] * n))
    return TTTensor(cores)


def _truncation_rank(s: np.ndarray, delta: float, max_rank: int | None) -> int:
    """Smallest rank whose discarded squared tail is <= delta**2."""
    tail = np.cumsum((s**2)[::-1])[::-1]  # tail[j] = sum_{k>=j} s_k^2
    r = len(s)
    ok = np.nonzero(tail <= delta**2)[0]
    if ok.size:
        r = max(int(ok[0]), 1)
    if max_rank is not None:
        r = min(r, max_rank)
    return r


def tt_from_dense(a: np.ndarray, cfg: TruncationConfig | None = None) -> TTTensor:
    """TT-SVD of a full array."""
    cfg = cfg or TruncationConfig(0.0)
    a = np.asarray(a)
    if a.ndim == 0:
        raise ValueError("need at least a vector")
    modes = a.shape
    d = len(modes)
    delta = cfg.epsilon * np.linalg.norm(a) / math.sqrt(max(d - 1, 1))
    cores = []
    r = 1
    c = a.reshape(1, -1)
    for k in range(d - 1):
        c = c.reshape(r * modes[k], -1)
        u, s, vh = np.linalg.svd(c, full_matrices=False)
        rk = _truncation_rank(s, delta, cfg.max_rank)
        cores.append(u[:, :rk].reshape(r, modes[k], rk))
        c = s[:rk, None] * vh[:rk]
        r = rk
    cores.append(c.reshape(r, modes[-1], 1))
    return TTTensor(cores)


def tt_to_dense(w: TTTensor) -> np.ndarray:
    out = w.cores[0].reshape(w.modes[0], -1)
    for c in w.cores[1:]:
        out = out @ c.reshape(c.shape[0], -1)
        out = out.reshape(-1, c.shape[2])
    return out.reshape(w.modes)


def tt_element(w: TTTensor, idx) -> complex | float:
    idx = tuple(int(i) for i in np.atleast_1d(idx))
    if len(idx) != w.d:
        raise IndexError(f"expected {w.d} indices, got {len(idx)}")
    v = np.ones((1,), dtype=w.dtype)
    for k, (i, c) in enumerate(zip(idx, w.cores)):
        if not 0 <= i < c.shape[1]:
            raise IndexError(f"index {i} out of range for mode {k} of size {c.shape[1]}")
        v = v @ c[:, i, :]
    return v[0]


def tt_elements(w: TTTensor, idx: np.ndarray) -> np.ndarray:
    """Vectorised element evaluation at the rows of an ``(m, d)`` index array."""
    idx = np.asarray(idx, dtype=np.intp)
    if idx.ndim != 2 or idx.shape[1] != w.d:
        raise IndexError(f"index array must be (m, {w.d}), got {idx.shape}")
    if np.any(idx < 0) or np.any(idx >= np.array(w.modes)):
        raise IndexError("index out of range")
    v = np.ones((idx.shape[0], 1), dtype=w.dtype)
    for k, c in enumerate(w.cores):
        v = np.einsum("ma,mab->mb", v, c[:, idx[:, k], :].transpose(1, 0, 2))
    return v[:, 0]


def tt_scale(w: TTTensor, alpha) -> TTTensor:
    """``alpha * w`` with ``|alpha|**(1/d)`` spread over all cores; the first
    core carries the phase (sign) of ``alpha``."""
    d = w.d
    mag = abs(alpha)
    root = mag ** (1.0 / d)
    phase = alpha / mag if mag != 0 else 0.0
    if np.isrealobj(np.asarray(alpha)):
        phase = float(np.real(phase))
    cores = [c * root for c in w.cores]
    cores[0] = cores[0] * phase
    return TTTensor(cores)


def tt_add(u: TTTensor, v: TTTensor) -> TTTensor:
    """Exact sum; interior ranks add up."""
    _check_same_modes(u, v)
    if u.field != v.field:
        raise ValueError(f"field mismatch: {u.field} vs {v.field}")
    d = u.d
    if d == 1:
        return TTTensor([u.cores[0] + v.cores[0]])
    dtype = np.result_type(u.dtype, v.dtype)
    cores = [np.concatenate([u.cores[0], v.cores[0]], axis=2)]
    for a, b in zip(u.cores[1:-1], v.cores[1:-1]):
        ra, n, sa = a.shape
        rb, _, sb = b.shape
        c = np.zeros((ra + rb, n, sa + sb), dtype=dtype)
        c[:ra, :, :sa] = a
        c[ra:, :, sa:] = b
        cores.append(c)
    cores.append(np.concatenate([u.cores[-1], v.cores[-1]], axis=0))
    return TTTensor(cores)


def tt_sub(u: TTTensor, v: TTTensor) -> TTTensor:
    return tt_add(u, tt_scale(v, -1.0))


def tt_hadamard(u: TTTensor, v: TTTensor) -> TTTensor:
    """Exact elementwise product; interior ranks multiply."""
    _check_same_modes(u, v)
    cores = []
    for a, b in zip(u.cores, v.cores):
        ra, n, sa = a.shape
        rb, _, sb = b.shape
        c = np.einsum("aic,bid->abicd", a, b).reshape(ra * rb, n, sa * sb)
        cores.append(c)
    return TTTensor(cores)


def tt_inner(u: TTTensor, v: TTTensor):
    """``sum(u * conj(v))`` by an accumulated left-to-right sweep."""
    _check_same_modes(u, v)
    g = np.ones((1, 1), dtype=np.result_type(u.dtype, v.dtype))
    for a, b in zip(u.cores, v.cores):
        g = np.einsum("ab,aic,bid->cd", g, a, b.conj(), optimize=True)
    val = g[0, 0]
    return val if np.iscomplexobj(val) else float(val)


def tt_dot(u: TTTensor, v: TTTensor):
    """Bilinear ``sum(u * v)`` without conjugation."""
    _check_same_modes(u, v)
    g = np.ones((1, 1), dtype=np.result_type(u.dtype, v.dtype))
    for a, b in zip(u.cores, v.cores):
        g = np.einsum("ab,aic,bid->cd", g, a, b, optimize=True)
    val = g[0, 0]
    return val if np.iscomplexobj(val) else float(val)


def tt_norm(w: TTTensor) -> float:
    # orthogonalize first: the Gram sweep loses relative accuracy for nearly
    # cancelling sums such as w - w
    wo = tt_orthogonalize(w, "right")
    return float(np.linalg.norm(wo.cores[0]))


def tt_sum(w: TTTensor, weights: Sequence[np.ndarray] | None = None):
    """Sum of all entries, optionally with per-mode weight vectors."""
    g = np.ones((1,), dtype=w.dtype)
    for k, c in enumerate(w.cores):
        m = c.sum(axis=1) if weights is None else np.einsum("aib,i->ab", c, weights[k])
        g = g @ m
    val = g[0]
    return val if np.iscomplexobj(val) else float(val)


def tt_conj(w: TTTensor) -> TTTensor:
    return TTTensor([c.conj() for c in w.cores])


def _real_embedding(w: TTTensor, part: str) -> TTTensor:
    # a + ib  <->  [[a, -b], [b, a]]; product of embeddings embeds the product
    d = w.d
    if d == 1:
        c = w.cores[0]
        return TTTensor([c.real.copy() if part == "real" else c.imag.copy()])
    cores = []
    for k, c in enumerate(w.cores):
        a, b = c.real, c.imag
        if k == 0:
            cores.append(np.concatenate([a, -b], axis=2))
        elif k == d - 1:
            if part == "real":
                cores.append(np.concatenate([a, b], axis=0))
            else:
                cores.append(np.concatenate([b, -a], axis=0))
        else:
            top = np.concatenate([a, -b], axis=2)
            bot = np.concatenate([b, a], axis=2)
            cores.append(np.concatenate([top, bot], axis=0))
    return TTTensor(cores)


def tt_real(w: TTTensor) -> TTTensor:
    """Entrywise real part as a real TT (rank at most doubled, not rounded)."""
    if w.field == "real":
        return w
    return _real_embedding(w, "real")


def tt_imag(w: TTTensor) -> TTTensor:
    """Entrywise imaginary part as a real TT (rank at most doubled, not rounded)."""
    if w.field == "real":
        return tt_zeros(w.modes)
    return _real_embedding(w, "imag")


def tt_orthogonalize(w: TTTensor, direction: str = "left") -> TTTensor:
    """QR sweep.  ``"left"``: cores 1..d-1 get orthonormal left unfoldings and
    the last core carries the norm.  ``"right"``: cores 2..d get orthonormal
    right unfoldings and the first core carries the norm."""
    cores = [np.array(c) for c in w.cores]
    d = len(cores)
    if direction == "left":
        for k in range(d - 1):
            r0, n, r1 = cores[k].shape
            q, r = np.linalg.qr(cores[k].reshape(r0 * n, r1))
            cores[k] = q.reshape(r0, n, q.shape[1])
            cores[k + 1] = np.einsum("ab,bic->aic", r, cores[k + 1])
    elif direction == "right":
        for k in range(d - 1, 0, -1):
            r0, n, r1 = cores[k].shape
            q, r = np.linalg.qr(cores[k].reshape(r0, n * r1).T)
            cores[k] = q.T.reshape(q.shape[1], n, r1)
            cores[k - 1] = np.einsum("aib,bc->aic", cores[k - 1], r.T)
    else:
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
    return TTTensor(cores)


def tt_round(w: TTTensor, cfg: TruncationConfig | None = None, return_error: bool = False):
    """SVD-based recompression to relative Frobenius accuracy ``cfg.epsilon``.

    Right-to-left QR sweep, then a left-to-right truncated-SVD sweep with the
    per-bond threshold ``epsilon * ||w|| / sqrt(d - 1)``.  With ``max_rank``
    set the result may miss the tolerance; ``return_error=True`` returns
    ``(u, rel_err)`` where ``rel_err`` is the exact relative error
    ``||w - u|| / ||w||`` implied by the discarded singular values.
    """
    cfg = cfg or TruncationConfig()
    d = w.d
    wo = tt_orthogonalize(w, "right")
    cores = [np.array(c) for c in wo.cores]
    nrm = np.linalg.norm(cores[0])
    delta = cfg.epsilon * nrm / math.sqrt(max(d - 1, 1))
    discarded = 0.0
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        u, s, vh = np.linalg.svd(cores[k].reshape(r0 * n, r1), full_matrices=False)
        rk = _truncation_rank(s, delta, cfg.max_rank)
        discarded += float(np.sum(s[rk:] ** 2))
        cores[k] = u[:, :rk].reshape(r0, n, rk)
        cores[k + 1] = np.einsum("ab,bic->aic", s[:rk, None] * vh[:rk], cores[k + 1])
    out = TTTensor(cores)
    if return_error:
        rel = math.sqrt(discarded) / nrm if nrm > 0 else 0.0
        return out, rel
    return out


def _hadamard_sketch(u: TTTensor, v: TTTensor, ell: list, rng) -> TTTensor:
    """Randomised range finder for ``u * v`` without forming product cores.

    Right sketches contract the product with a Gaussian TT of ranks ``ell``;
    a left-to-right sweep then orthogonalises the sketched unfoldings.  Costs
    ``O(n ell r^3)`` per core instead of ``O(n r^6)`` for rounding the exact
    product.  Contractions are written as batched matmuls over the mode index.
    """
    d = u.d
    dtype = np.result_type(u.dtype, v.dtype)
    W = [None] * (d + 1)
    W[d] = np.ones((1, 1, 1), dtype=dtype)
    for k in range(d - 1, 0, -1):
        U, V = u.cores[k], v.cores[k]
        ra, n, rx = U.shape
        rb, _, ry = V.shape
        R = rng.standard_normal((ell[k], n, ell[k + 1]))
        Wn = W[k + 1]
        l1 = Wn.shape[2]
        # t1[i, l, (x, y)] = sum_m R[l, i, m] W[x, y, m]
        t1 = R.transpose(1, 0, 2) @ Wn.reshape(rx * ry, l1).T
        t1 = t1.reshape(n, ell[k], rx, ry).transpose(0, 2, 3, 1).reshape(n, rx, ry * ell[k])
        # t2[i, a, (y, l)] = sum_x U[a, i, x] t1[i, x, (y, l)]
        t2 = U.transpose(1, 0, 2) @ t1
        t2 = t2.reshape(n, ra, ry, ell[k]).transpose(0, 2, 1, 3).reshape(n * ry, ra * ell[k])
        W[k] = (V.reshape(rb, n * ry) @ t2).reshape(rb, ra, ell[k]).transpose(1, 0, 2)
    L = np.ones((1, 1, 1), dtype=dtype)
    cores = []
    for k in range(d):
        U, V = u.cores[k], v.cores[k]
        ra, n, rx = U.shape
        rb, _, ry = V.shape
        s = L.shape[0]
        # t[(s, b), (i, x)] = sum_a L[s, a, b] U[a, i, x]
        t = L.transpose(0, 2, 1).reshape(s * rb, ra) @ U.reshape(ra, n * rx)
        t = t.reshape(s, rb, n, rx).transpose(2, 0, 3, 1).reshape(n, s * rx, rb)
        Z = (t @ V.transpose(1, 0, 2)).reshape(n, s, rx, ry).transpose(1, 0, 2, 3)
        if k == d - 1:
            cores.append(Z.reshape(s, n, 1))
            break
        Zm = Z.reshape(s * n, rx * ry)
        Y = Zm @ W[k + 1].reshape(rx * ry, -1)
        q, _ = np.linalg.qr(Y)
        cores.append(q.reshape(s, n, q.shape[1]))
        L = (q.conj().T @ Zm).reshape(q.shape[1], rx, ry)
    return TTTensor(cores)


def tt_hadamard_round(u: TTTensor, v: TTTensor, cfg: TruncationConfig | None = None,
                      exact_limit: int = 64, oversample: int = 8, seed: int = 0) -> TTTensor:
    """``tt_round(tt_hadamard(u, v), cfg)``, computed through a randomised
    sketch when the product ranks exceed ``exact_limit``.

    The sketch rank starts at ``max(ranks) + oversample`` and doubles until
    every rounded bond rank stays ``oversample`` below it (or the sketch is
    as large as the exact product).
    """
    cfg = cfg or TruncationConfig()
    _check_same_modes(u, v)
    prod = [a * b for a, b in zip(u.ranks, v.ranks)]
    if max(prod) <= exact_limit:
        return tt_round(tt_hadamard(u, v), cfg)
    rng = np.random.default_rng(seed)
    d = u.d
    caps = [1] + [min(prod[k], math.prod(u.modes[:k]), math.prod(u.modes[k:])) for k in range(1, d)] + [1]
    target = max(max(u.ranks), max(v.ranks)) + oversample
    while True:
        ell = [1] + [min(target, caps[k]) for k in range(1, d)] + [1]
        out = tt_round(_hadamard_sketch(u, v, ell, rng), cfg)
        saturated = any(out.ranks[k] > ell[k] - oversample and ell[k] < caps[k] for k in range(1, d))
        if not saturated:
            return out
        target *= 2


def _encode(a: np.ndarray):
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def tt_to_json(w: TTTensor) -> dict:
    """Plain-dict form: modes, ranks, field and nested core arrays
    (complex entries as ``[re, im]`` pairs)."""
    return {
        "modes": list(w.modes),
        "ranks": list(w.ranks),
        "field": w.field,
        "cores": [_encode(c) for c in w.cores],
    }


def tt_from_json(obj: dict) -> TTTensor:
    field = obj.get("field", "real")
    cores = []
    for c in obj["cores"]:
        a = np.asarray(c, dtype=float)
        if field == "complex":
            a = a[..., 0] + 1j * a[..., 1]
        cores.append(a)
    w = TTTensor(cores)
    if list(w.modes) != list(obj["modes"]) or list(w.ranks) != list(obj["ranks"]):
        raise ValueError("modes/ranks in header do not match the cores")
    return w
