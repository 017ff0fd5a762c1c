"""Dense complex matrix kernel.

Everything here works on plain ``numpy`` arrays.  Subsystem structure is
passed alongside as an ordered sequence of factor dimensions, with the first
factor being the most significant index (the ``np.kron`` convention).
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionLimitError, DimensionMismatchError, NotPSDError, ValidationError

TOL_EIG = 1e-10
TOL_PSD = 1e-9

_DEFAULT_DIM_LIMIT = 4096
_dim_limit: int | None = None


def get_dim_limit() -> int:
    """Current cap on any Hilbert-space dimension we materialize.

    An explicit :func:`set_dim_limit` wins over the ``QSEP_DIM_LIMIT``
    environment variable, which wins over the default of 4096.
    """
    if _dim_limit is not None:
        return _dim_limit
    env = os.environ.get("QSEP_DIM_LIMIT")
    if env:
        return int(env)
    return _DEFAULT_DIM_LIMIT


def set_dim_limit(limit: int | None) -> None:
    """Override the dimension cap; ``None`` restores env/default lookup."""
    global _dim_limit
    if limit is not None and limit < 1:
        raise ValidationError("dimension limit must be positive")
    _dim_limit = limit


def check_dim(dim: int, what: str = "dimension") -> int:
    limit = get_dim_limit()
    if dim > limit:
        raise DimensionLimitError(f"{what} {dim} exceeds the configured limit {limit}")
    return dim


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, dagger(m), atol=tol, rtol=0)


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.linalg.norm(dagger(m) @ m - np.eye(m.shape[0]), 2) <= tol


def is_isometry(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        return False
    return np.linalg.norm(dagger(m) @ m - np.eye(m.shape[1]), 2) <= tol


def _check_finite(m: np.ndarray) -> None:
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")


def _check_dims(dims: Sequence[int], total: int) -> list[int]:
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValidationError(f"subsystem dimensions must be positive, got {dims}")
    if math.prod(dims) != total:
        raise DimensionMismatchError(f"dims {dims} do not multiply to {total}")
    return dims


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    if not ops:
        raise ValidationError("tensor needs at least one operand")
    out = np.asarray(ops[0])
    _check_finite(out)
    for op in ops[1:]:
        op = np.asarray(op)
        _check_finite(op)
        check_dim(out.shape[0] * op.shape[0], "tensor product dimension")
        if out.ndim == 2 and op.ndim == 2:
            check_dim(out.shape[1] * op.shape[1], "tensor product dimension")
        out = np.kron(out, op)
    return out


def _normalize_keep(keep, n: int) -> list[int]:
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"subsystem index out of range for {n} subsystems: {keep}")
    return keep


def partial_trace(m: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original relative order.
    """
    m = np.asarray(m)
    dims = _check_dims(dims, m.shape[0])
    n = len(dims)
    keep = _normalize_keep(keep, n)
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # einsum with letters: row index i, column index n+i
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for i in traced:
        letters[n + i] = letters[i]
    out_letters = [letters[i] for i in keep] + [letters[n + i] for i in keep]
    expr = "".join(letters) + "->" + "".join(out_letters)
    dk = math.prod(dims[i] for i in keep)
    return np.einsum(expr, t).reshape(dk, dk)


def reduced_density(psi: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Reduced density matrix of a pure state vector on the ``keep`` subsystems."""
    psi = np.asarray(psi).reshape(-1)
    dims = _check_dims(dims, psi.shape[0])
    keep = _normalize_keep(keep, len(dims))
    rest = [i for i in range(len(dims)) if i not in keep]
    t = psi.reshape(dims).transpose(keep + rest)
    dk = math.prod(dims[i] for i in keep)
    mat = t.reshape(dk, -1)
    return mat @ dagger(mat)


def partial_transpose(m: np.ndarray, dims: Sequence[int], sys) -> np.ndarray:
    """Transpose the listed subsystems of an operator."""
    m = np.asarray(m)
    dims = _check_dims(dims, m.shape[0])
    n = len(dims)
    sys = _normalize_keep(sys, n)
    axes = list(range(2 * n))
    for i in sys:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return m.reshape(dims + dims).transpose(axes).reshape(m.shape)


def permute_subsystems(x: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Move subsystem ``j`` of a vector or operator to position ``perm[j]``."""
    x = np.asarray(x)
    dims = _check_dims(dims, x.shape[0])
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"{perm} is not a permutation of {n} subsystems")
    inv = [0] * n
    for j, p in enumerate(perm):
        inv[p] = j
    new_dims = [dims[inv[a]] for a in range(n)]
    if x.ndim == 1:
        return x.reshape(dims).transpose(inv).reshape(-1)
    t = x.reshape(dims + dims).transpose(inv + [n + i for i in inv])
    return t.reshape(math.prod(new_dims), math.prod(new_dims))


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eigh(m: np.ndarray) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = np.asarray(m, dtype=complex)
    _check_finite(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("eigh needs a square matrix")
    w, v = np.linalg.eigh(hermitian_part(m))
    return HermitianEigen(w, v)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m)
    _check_finite(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("trace norm needs a square matrix")
    if is_hermitian(m, tol=1e-13):
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def psd_sqrt(m: np.ndarray, tol: float = TOL_PSD) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative
    raises :class:`NotPSDError`.
    """
    w, v = eigh(m)
    if w.size and w[0] < -tol:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{tol:g}")
    w = np.sqrt(np.clip(w, 0.0, None))
    return hermitian_part((v * w) @ dagger(v))


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues dropped)."""
    w, v = eigh(m)
    w = np.clip(w, 0.0, None)
    return hermitian_part((v * w) @ dagger(v))


def permutation_unitary(perm: Sequence[int], slot_dim: int) -> np.ndarray:
    """Unitary moving the vector in slot ``j`` to slot ``perm[j]`` (0-based)."""
    k = len(perm)
    total = check_dim(slot_dim**k, "permutation unitary dimension")
    eye = np.eye(total, dtype=complex)
    cols = eye.reshape([slot_dim] * k + [total])
    inv = [0] * k
    for j, p in enumerate(perm):
        inv[p] = j
    return cols.transpose(inv + [k]).reshape(total, total)


def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """The permutation ``p ∘ q`` (apply ``q`` first)."""
    return tuple(p[q[j]] for j in range(len(q)))


def unitary_from_hermitian(h: np.ndarray) -> np.ndarray:
    """``exp(i h)`` for Hermitian ``h``."""
    w, v = eigh(h)
    return (v * np.exp(1j * w)) @ dagger(v)


def hermitian_from_params(theta: np.ndarray, dim: int) -> np.ndarray:
    """Map ``dim**2`` real parameters onto a Hermitian matrix."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != dim * dim:
        raise ValidationError(f"expected {dim * dim} parameters, got {theta.size}")
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = theta[:dim]
    iu = np.triu_indices(dim, 1)
    n_off = len(iu[0])
    h[iu] = theta[dim : dim + n_off] + 1j * theta[dim + n_off :]
    return h + np.triu(h, 1).conj().T
