"""Multipartite extendibility and the l-party permutation-test protocol.

Extensions use copy-major ordering: copy 1 holds every party
``C_{1,1}..C_{1,l}``, then copy 2 holds the extended parties, and so on.
The test projector is the product of one symmetrizer per extended party,
i.e. the average over the product group of per-party slot permutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .circuit import MixedCircuit
from .errors import DimensionMismatchError, InvalidGapError, ValidationError
from .extend import _trace_with_row_perm, slot_permutation, transposition_residuals
from .protocol import (
    ProtocolRun,
    ProverStrategy,
    _check_k,
    _group_elements,
    _run_state_protocol,
    _uhlmann_stage,
    identity_prover_strategy,
    verifier_purification,
)
from .qstate import DensityMatrix, StateLike, as_matrix, locc_lower_bound

__all__ = [
    "MultiSeparableDecomposition",
    "MultiExtensionState",
    "slot_groups",
    "multi_canonical_k_extension",
    "multi_canonical_extension_purification",
    "multi_transposition_residuals",
    "multi_permutation_test_accept_prob",
    "lemma2_k",
    "prop2_bound",
    "multi_1locc_distance_lower",
    "multi_identity_prover_strategy",
    "multi_honest_prover_strategy",
    "run_multi_qip2_protocol",
]


@dataclass(frozen=True)
class MultiSeparableDecomposition:
    """``sum_x p(x) ⊗_j |psi^j_x><psi^j_x|`` with one pure factor per party."""

    weights: np.ndarray
    factors: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or w.size != len(self.factors):
            raise ValidationError("weights and factors must be nonempty and of equal length")
        if np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-10:
            raise ValidationError("weights must form a probability vector")
        facs = tuple(tuple(np.asarray(v, dtype=complex).reshape(-1) for v in term) for term in self.factors)
        dims = tuple(v.size for v in facs[0])
        for term in facs:
            if tuple(v.size for v in term) != dims:
                raise ValidationError("all terms must share party dimensions")
            for v in term:
                if abs(np.linalg.norm(v) - 1) > 1e-10:
                    raise ValidationError("factors must be unit vectors")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))
        object.__setattr__(self, "factors", facs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.factors[0])

    @property
    def l(self) -> int:
        return len(self.dims)

    def __len__(self) -> int:
        return len(self.factors)

    def _term_vector(self, x: int) -> np.ndarray:
        v = np.ones(1, dtype=complex)
        for f in self.factors[x]:
            v = np.kron(v, f)
        return v

    def state(self) -> DensityMatrix:
        m = sum(p * np.outer(self._term_vector(x), self._term_vector(x).conj()) for x, p in enumerate(self.weights))
        return DensityMatrix.coerce(m, self.dims)


def _extended(l: int, extended) -> list[int]:
    ext = list(range(l)) if extended is None else sorted(set(int(j) for j in extended))
    if not ext or ext[0] < 0 or ext[-1] >= l:
        raise ValidationError(f"extended parties {extended} invalid for {l} parties")
    return ext


def slot_groups(l: int, k: int, extended=None, offset: int = 0) -> list[list[int]]:
    """Subsystem indices ``C_{1,j}, ..., C_{k,j}`` for every extended party ``j``."""
    ext = _extended(l, extended)
    n = len(ext)
    return [[offset + j] + [offset + l + c * n + pos for c in range(k - 1)] for pos, j in enumerate(ext)]


def _copy_major_dims(party_dims: Sequence[int], k: int, ext: Sequence[int]) -> list[int]:
    return list(party_dims) + [party_dims[j] for _ in range(k - 1) for j in ext]


@dataclass(frozen=True)
class MultiExtensionState:
    """Candidate multipartite k-extension in copy-major order."""

    state: DensityMatrix
    k: int
    party_dims: tuple[int, ...]
    extended: tuple[int, ...]
    marginal: DensityMatrix = None

    def __post_init__(self):
        object.__setattr__(self, "party_dims", tuple(self.party_dims))
        object.__setattr__(self, "extended", tuple(self.extended))
        want = _copy_major_dims(self.party_dims, self.k, self.extended)
        if list(self.state.dims) != want:
            raise DimensionMismatchError(f"extension dims {self.state.dims} vs copy-major layout {want}")
        if self.marginal is None:
            object.__setattr__(self, "marginal", self.state.ptrace(list(range(len(self.party_dims)))))

    @property
    def l(self) -> int:
        return len(self.party_dims)

    @property
    def groups(self) -> list[list[int]]:
        return slot_groups(self.l, self.k, self.extended)


def multi_canonical_k_extension(d: MultiSeparableDecomposition, k: int, extended=None) -> MultiExtensionState:
    """``sum_x p(x) ⊗_j (psi^j_x)^{⊗k}``, laid out copy-major."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    ext = _extended(d.l, extended)
    dims = _copy_major_dims(d.dims, k, ext)
    total = la.check_dim(math.prod(dims), "multipartite extension dimension")
    m = np.zeros((total, total), dtype=complex)
    for x, p in enumerate(d.weights):
        v = _canonical_term(d, x, k, ext)
        m += p * np.outer(v, v.conj())
    return MultiExtensionState(DensityMatrix.coerce(m, dims), k, d.dims, tuple(ext), d.state())


def _canonical_term(d: MultiSeparableDecomposition, x: int, k: int, ext: Sequence[int]) -> np.ndarray:
    v = d._term_vector(x)
    for _ in range(k - 1):
        for j in ext:
            v = np.kron(v, d.factors[x][j])
    return v


def multi_canonical_extension_purification(d: MultiSeparableDecomposition, k: int, extended=None) -> np.ndarray:
    """``sum_x sqrt(p(x)) |x>_flag ⊗ (copy-major tensor powers)``, flag first."""
    ext = _extended(d.l, extended)
    n = len(d)
    la.check_dim(n * math.prod(_copy_major_dims(d.dims, k, ext)), "multipartite purification dimension")
    out = 0
    for x, p in enumerate(d.weights):
        out = out + math.sqrt(p) * np.kron(np.eye(n)[x], _canonical_term(d, x, k, ext))
    return np.asarray(out) / np.linalg.norm(out)


def multi_transposition_residuals(ext: MultiExtensionState) -> list[float]:
    out = []
    for g in ext.groups:
        out.extend(transposition_residuals(ext.state.matrix, ext.state.dims, g))
    return out


def multi_permutation_test_accept_prob(tau: StateLike, k: int, l: int, extended=None, spectators: int = 0, dims=None) -> float:
    """``Tr[P tau]`` with ``P`` the product of the per-party symmetrizers.

    ``tau`` is laid out copy-major after ``spectators`` leading subsystems.
    """
    m = as_matrix(tau)
    dims = tuple(dims) if dims is not None else getattr(tau, "dims", None)
    if dims is None:
        raise DimensionMismatchError("slot structure requires subsystem dims")
    ext = _extended(l, extended)
    groups = slot_groups(l, k, ext, offset=spectators)
    if len(dims) != spectators + l + (k - 1) * len(ext):
        raise DimensionMismatchError(f"dims {dims} do not fit l={l}, k={k}")
    for g in groups:
        if len({dims[s] for s in g}) != 1:
            raise DimensionMismatchError("slot dimensions differ within a party")
    elems = _group_elements(groups)
    n_sub = len(dims)
    acc = 0.0
    for g in elems:
        full = list(range(n_sub))
        for slots, p in zip(groups, g):
            sp = slot_permutation(n_sub, slots, p)
            full = [sp[full[j]] for j in range(n_sub)]
        acc += _trace_with_row_perm(m, dims, full).real
    return float(np.clip(acc / len(elems), 0.0, 1.0))


def lemma2_k(eps: float, delta: float, dim_c: int, l: int) -> int:
    """``ceil(l + 4 l**2 log2|C| / (eps - delta)**2)``."""
    if not 0 < delta < eps:
        raise InvalidGapError(f"need 0 < delta < eps, got delta={delta}, eps={eps}")
    if l < 2:
        raise ValidationError("l must be at least 2")
    return int(math.ceil(l + 4 * l**2 * math.log2(dim_c) / (eps - delta) ** 2))


def prop2_bound(k: int, delta: float, dim_c: int, l: int) -> float:
    """``sqrt(4 l**2 log2|C| / (k - l)) + delta``."""
    if k <= l:
        raise ValidationError(f"need k > l, got k={k}, l={l}")
    return math.sqrt(4 * l**2 * math.log2(dim_c) / (k - l)) + delta


def multi_1locc_distance_lower(rho: StateLike, sigma: StateLike, parties: Sequence[Sequence[int]], budget: int = 300, seed: int = 0, dims=None) -> float:
    """Lower bound with parties 2..l measuring; same search as the bipartite bound."""
    return locc_lower_bound(rho, sigma, parties, budget=budget, seed=seed, dims=dims)


def multi_identity_prover_strategy(c: MixedCircuit, k: int, extended=None) -> ProverStrategy:
    ext = _extended(len(c.partition.parties), extended)
    return identity_prover_strategy(c, k, ext)


def multi_honest_prover_strategy(c: MixedCircuit, d: MultiSeparableDecomposition, k: int, extended=None) -> ProverStrategy:
    """Uhlmann-steer the verifier's purification onto the canonical extension."""
    _check_k(k)
    l = len(c.partition.parties)
    ext = _extended(l, extended)
    if tuple(c.party_dims) != d.dims:
        raise DimensionMismatchError(f"circuit parties {c.party_dims} vs decomposition {d.dims}")
    psi, gd = verifier_purification(c)
    d_r, party_dims = gd[0], list(gd[1:])
    slots = [party_dims[j] for _ in range(k - 1) for j in ext]
    n = len(d)
    phi = multi_canonical_extension_purification(d, k, ext)
    # (flag, parties, copies) -> (junk, flag, copies, parties)
    pdims = [n] + party_dims + slots
    order = [0] + list(range(1 + l, len(pdims))) + list(range(1, 1 + l))
    vec = phi.reshape(pdims).transpose(order).reshape(-1)
    junk = np.eye(d_r)[0]
    target = np.kron(junk, vec)
    anc = (n,) + tuple(slots)
    d_anc = math.prod(anc)
    src = np.kron(psi.reshape(d_r, -1), np.eye(d_anc)[:, :1]).reshape(-1)
    d_y = d_r * n * math.prod(slots)
    u = _uhlmann_stage(src, d_r * d_anc, target, d_y, party_dims)
    return ProverStrategy((u,), (anc,), ((d_r * n,) + tuple(slots),), "multi-honest")


def run_multi_qip2_protocol(c: MixedCircuit, p: ProverStrategy, k: int, extended=None) -> ProtocolRun:
    """l-party permutation-test protocol; ``extended`` defaults to every party."""
    _check_k(k)
    ext = _extended(len(c.partition.parties), extended)
    return _run_state_protocol(c, p, k, ext)
