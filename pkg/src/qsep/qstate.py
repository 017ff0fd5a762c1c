"""Quantum states, Stinespring channels, and distance measures.

Conventions: trace distance is the unnormalized ``||rho - sigma||_1`` in
``[0, 2]``; fidelity is the squared form ``||sqrt(rho) sqrt(sigma)||_1**2``;
purifications always put the reference system first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize

from . import linalg as la
from .errors import DimensionMismatchError, NotPSDError, ValidationError

__all__ = [
    "DensityMatrix",
    "PureState",
    "StinespringChannel",
    "Povm",
    "as_matrix",
    "trace_distance",
    "fidelity",
    "purify",
    "uhlmann_unitary",
    "helstrom_measurement",
    "apply_channel",
    "one_way_locc_distance_lower",
    "locc_lower_bound",
    "random_unitary",
    "random_pure_state",
    "random_density_matrix",
    "random_channel",
    "depolarizing_channel",
    "identity_channel",
]


def _as_dims(dims, total: int) -> tuple[int, ...]:
    if dims is None:
        dims = (total,)
    dims = tuple(int(d) for d in dims)
    if math.prod(dims) != total:
        raise DimensionMismatchError(f"dims {dims} do not multiply to {total}")
    return dims


@dataclass(frozen=True)
class DensityMatrix:
    """A PSD unit-trace matrix with an ordered tensor factorization."""

    matrix: np.ndarray
    dims: tuple[int, ...] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix has non-finite entries")
        if not np.allclose(m, la.dagger(m), atol=1e-12, rtol=0):
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-10:
            raise ValidationError(f"density matrix trace {np.trace(m).real!r} != 1")
        w = np.linalg.eigvalsh(la.hermitian_part(m))
        if w[0] < -la.TOL_PSD:
            raise ValidationError(f"density matrix has eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "matrix", la.hermitian_part(m))
        object.__setattr__(self, "dims", _as_dims(self.dims, m.shape[0]))

    @classmethod
    def from_vector(cls, psi, dims=None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        d = math.prod(dims)
        return cls(np.eye(d) / d, dims)

    @classmethod
    def coerce(cls, m: np.ndarray, dims=None) -> "DensityMatrix":
        """Build from a matrix carrying rounding noise (hermitize, renormalize)."""
        m = la.hermitian_part(np.asarray(m, dtype=complex))
        return cls(m / np.trace(m).real, dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def ptrace(self, keep) -> "DensityMatrix":
        keep = [keep] if isinstance(keep, int) else sorted(keep)
        red = la.partial_trace(self.matrix, self.dims, keep)
        return DensityMatrix.coerce(red, [self.dims[i] for i in keep])

    def permute(self, perm: Sequence[int]) -> "DensityMatrix":
        out = la.permute_subsystems(self.matrix, self.dims, perm)
        new_dims = [0] * len(self.dims)
        for j, p in enumerate(perm):
            new_dims[p] = self.dims[j]
        return DensityMatrix(out, new_dims)

    def regroup(self, groups: Sequence[Sequence[int]]) -> "DensityMatrix":
        """Reorder subsystems into ``groups`` and merge each group into one factor."""
        order = [i for g in groups for i in g]
        if sorted(order) != list(range(len(self.dims))):
            raise ValidationError(f"groups {groups} do not partition {len(self.dims)} subsystems")
        perm = [0] * len(order)
        for pos, i in enumerate(order):
            perm[i] = pos
        moved = la.permute_subsystems(self.matrix, self.dims, perm)
        return DensityMatrix(moved, [math.prod(self.dims[i] for i in g) for g in groups])


@dataclass(frozen=True)
class PureState:
    """A unit vector with an ordered tensor factorization."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(a)):
            raise ValidationError("state vector has non-finite entries")
        if abs(np.linalg.norm(a) - 1) > 1e-10:
            raise ValidationError(f"state vector norm {np.linalg.norm(a)!r} != 1")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "dims", _as_dims(self.dims, a.shape[0]))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        return DensityMatrix.from_vector(self.amplitudes, self.dims)

    def reduced(self, keep) -> DensityMatrix:
        keep = [keep] if isinstance(keep, int) else sorted(keep)
        red = la.reduced_density(self.amplitudes, self.dims, keep)
        return DensityMatrix.coerce(red, [self.dims[i] for i in keep])

    def permute(self, perm: Sequence[int]) -> "PureState":
        out = la.permute_subsystems(self.amplitudes, self.dims, perm)
        new_dims = [0] * len(self.dims)
        for j, p in enumerate(perm):
            new_dims[p] = self.dims[j]
        return PureState(out, new_dims)


StateLike = Union[DensityMatrix, PureState, np.ndarray]


def as_matrix(x: StateLike) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        return np.outer(x, x.conj())
    return x


def _dims_of(x: StateLike, dims=None) -> tuple[int, ...]:
    if dims is not None:
        return tuple(dims)
    if isinstance(x, (DensityMatrix, PureState)):
        return x.dims
    return (as_matrix(x).shape[0],)


@dataclass(frozen=True)
class StinespringChannel:
    """A CPTP map ``rho -> Tr_traced[U (rho ⊗ |0><0|) U^dag]``.

    ``output_dims`` is the factorization of the unitary's output space and
    ``traced`` lists which of those factors are discarded.
    """

    unitary: np.ndarray
    input_dims: tuple[int, ...]
    ancilla_dims: tuple[int, ...]
    output_dims: tuple[int, ...]
    traced: tuple[int, ...] = ()

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        object.__setattr__(self, "unitary", u)
        for name in ("input_dims", "ancilla_dims", "output_dims", "traced"):
            object.__setattr__(self, name, tuple(int(d) for d in getattr(self, name)))
        total = math.prod(self.input_dims) * math.prod(self.ancilla_dims)
        if u.shape != (total, total) or math.prod(self.output_dims) != total:
            raise ValidationError("Stinespring dimension bookkeeping is inconsistent")
        if not la.is_unitary(u, 1e-10):
            raise ValidationError("Stinespring dilation is not unitary")
        if any(t < 0 or t >= len(self.output_dims) for t in self.traced):
            raise ValidationError("traced index out of range")
        if len(self.traced) == len(self.output_dims):
            raise ValidationError("channel must keep at least one output factor")

    @property
    def kept(self) -> list[int]:
        return [i for i in range(len(self.output_dims)) if i not in self.traced]

    @property
    def kept_dims(self) -> tuple[int, ...]:
        return tuple(self.output_dims[i] for i in self.kept)

    def apply_operator(self, x: np.ndarray) -> np.ndarray:
        """Apply the (linearly extended) map to an arbitrary operator."""
        da = math.prod(self.ancilla_dims)
        anc = np.zeros((da, da), dtype=complex)
        anc[0, 0] = 1.0
        big = self.unitary @ np.kron(x, anc) @ la.dagger(self.unitary)
        return la.partial_trace(big, self.output_dims, self.kept)

    def choi(self) -> np.ndarray:
        """Unnormalized Choi matrix ``sum_ij |i><j| ⊗ N(|i><j|)``."""
        din = math.prod(self.input_dims)
        dout = math.prod(self.kept_dims)
        out = np.zeros((din * dout, din * dout), dtype=complex)
        for i in range(din):
            for j in range(din):
                e = np.zeros((din, din), dtype=complex)
                e[i, j] = 1.0
                out += np.kron(e, self.apply_operator(e))
        return out


def identity_channel(dims) -> StinespringChannel:
    d = math.prod(dims)
    return StinespringChannel(np.eye(d), tuple(dims), (), tuple(dims), ())


def depolarizing_channel(d: int) -> StinespringChannel:
    """Discard the input and re-prepare ``I/d``.

    The dilation prepares a maximally entangled pair on two ancillas and swaps
    one half into the output slot.
    """
    phi = np.eye(d).reshape(-1) / np.sqrt(d)
    prep = _complete_unitary(phi)
    # wires: (input, e1, e2)
    u_prep = np.kron(np.eye(d), prep)
    swap = la.permutation_unitary([1, 0, 2], d)
    u = swap @ u_prep
    return StinespringChannel(u, (d,), (d, d), (d, d, d), (1, 2))


def _complete_unitary(first_col: np.ndarray) -> np.ndarray:
    """A unitary whose first column is the given unit vector."""
    v = np.asarray(first_col, dtype=complex).reshape(-1)
    d = v.shape[0]
    m = np.eye(d, dtype=complex)
    m[:, 0] = v
    q, r = np.linalg.qr(m)
    # fix the phase so that q[:, 0] == v exactly up to rounding
    phase = r[0, 0] / abs(r[0, 0]) if abs(r[0, 0]) > 0 else 1.0
    q[:, 0] *= phase
    return q


@dataclass(frozen=True)
class Povm:
    elements: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not els:
            raise ValidationError("POVM needs at least one element")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d) or not la.is_hermitian(e, 1e-10):
                raise ValidationError("POVM elements must be Hermitian and equally sized")
            if np.linalg.eigvalsh(la.hermitian_part(e))[0] < -la.TOL_PSD:
                raise ValidationError("POVM element is not PSD")
        if np.linalg.norm(sum(els) - np.eye(d), 2) > 1e-10:
            raise ValidationError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @classmethod
    def from_basis(cls, u: np.ndarray) -> "Povm":
        """Projective measurement onto the columns of a unitary."""
        return cls(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])))

    def as_array(self) -> np.ndarray:
        return np.stack(self.elements)


def _check_same(rho: np.ndarray, sigma: np.ndarray) -> None:
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(f"shape mismatch {rho.shape} vs {sigma.shape}")


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    """``||rho - sigma||_1``, in ``[0, 2]``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same(a, b)
    if isinstance(rho, DensityMatrix) and isinstance(sigma, DensityMatrix) and rho.dims != sigma.dims:
        raise DimensionMismatchError(f"dims {rho.dims} vs {sigma.dims}")
    return la.trace_norm(a - b)


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    """Squared Uhlmann fidelity ``||sqrt(rho) sqrt(sigma)||_1**2``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same(a, b)
    if isinstance(rho, PureState):
        return float(np.real(rho.amplitudes.conj() @ b @ rho.amplitudes))
    if isinstance(sigma, PureState):
        return float(np.real(sigma.amplitudes.conj() @ a @ sigma.amplitudes))
    s = np.linalg.svd(_rank_sqrt(a) @ _rank_sqrt(b), compute_uv=False)
    return float(min(1.0, np.sum(s) ** 2))


def _rank_sqrt(m: np.ndarray) -> np.ndarray:
    # eigenvalues under the numerical-rank threshold would turn 1e-16 noise
    # into 1e-8 errors after the square root, so they are dropped
    w, v = la.eigh(m)
    if w.size and w[0] < -la.TOL_PSD:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{la.TOL_PSD:g}")
    cut = m.shape[0] * np.finfo(float).eps * max(float(w[-1]), 0.0)
    w = np.sqrt(np.where(w > cut, w, 0.0))
    return (v * w) @ la.dagger(v)


def purify(rho: StateLike, dims=None) -> PureState:
    """Canonical purification ``sum_i sqrt(l_i) |i>_ref |v_i>``.

    The reference has the same dimension as ``rho`` and comes first; the
    largest eigenvalue is attached to ``|0>_ref``.
    """
    m = as_matrix(rho)
    sys_dims = _dims_of(rho, dims)
    w, v = la.eigh(m)
    w, v = w[::-1], v[:, ::-1]
    w = np.sqrt(np.clip(w, 0.0, None))
    d = m.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if w[i] > 0:
            e = np.zeros(d)
            e[i] = 1.0
            psi += w[i] * np.kron(e, v[:, i])
    psi /= np.linalg.norm(psi)
    return PureState(psi, (d,) + tuple(sys_dims))


def _front(state: PureState, sub: int) -> np.ndarray:
    """Matrix ``M`` with ``|state> = sum M[x, j] |x>_sub |j>_rest``."""
    n = len(state.dims)
    if not 0 <= sub < n:
        raise IndexError(f"subsystem {sub} out of range")
    order = [sub] + [i for i in range(n) if i != sub]
    t = state.amplitudes.reshape(state.dims).transpose(order)
    return t.reshape(state.dims[sub], -1)


def polar_overlap_unitary(k: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Unitary ``U`` maximizing ``Re Tr(U k)``, identity on the null directions.

    With ``k = P S Q^dag`` the optimum on the support is ``Q P^dag``.  The
    remaining freedom maps ``ker(k^dag)`` onto ``ker(k)``; we take the
    unitary closest to the identity there.
    """
    n = k.shape[0]
    p, s, qh = np.linalg.svd(k)
    q = la.dagger(qh)
    tol = rtol * max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    u = q[:, :r] @ la.dagger(p[:, :r])
    if r < n:
        p_perp, q_perp = p[:, r:], q[:, r:]
        x, _, yh = np.linalg.svd(la.dagger(q_perp) @ p_perp)
        u = u + q_perp @ (x @ yh) @ la.dagger(p_perp)
    return u


def uhlmann_unitary(phi_rho: PureState, phi_sigma: PureState, purifying_subsystem: int = 0) -> np.ndarray:
    """Unitary on the purifying subsystem attaining Uhlmann's bound.

    Returns ``U`` with ``<phi_rho| (U ⊗ I) |phi_sigma> = sqrt(F)``, real and
    nonnegative, where ``F`` is the fidelity of the two reduced states.
    """
    if phi_rho.dims != phi_sigma.dims:
        raise DimensionMismatchError(f"purification dims {phi_rho.dims} vs {phi_sigma.dims}")
    m_rho = _front(phi_rho, purifying_subsystem)
    m_sig = _front(phi_sigma, purifying_subsystem)
    # <rho|(U⊗I)|sig> = Tr(M_rho^dag U M_sig) = Tr(U M_sig M_rho^dag)
    return polar_overlap_unitary(m_sig @ la.dagger(m_rho))


def helstrom_measurement(rho0: StateLike, rho1: StateLike) -> tuple[np.ndarray, np.ndarray]:
    """Optimal projectors ``(Pi0, Pi1)`` for discriminating two equiprobable states."""
    a, b = as_matrix(rho0), as_matrix(rho1)
    _check_same(a, b)
    w, v = la.eigh(a - b)
    cols = v[:, w >= -1e-12]
    pi0 = cols @ la.dagger(cols)
    return pi0, np.eye(a.shape[0]) - pi0


def apply_channel(ch: StinespringChannel, rho: StateLike) -> DensityMatrix:
    m = as_matrix(rho)
    if m.shape[0] != math.prod(ch.input_dims):
        raise DimensionMismatchError(f"channel input {ch.input_dims} vs state dim {m.shape[0]}")
    return DensityMatrix.coerce(ch.apply_operator(m), ch.kept_dims)


# --------------------------------------------------------------------------
# random objects


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (``rank=None``) or induced-measure random state."""
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ la.dagger(g)
    return la.hermitian_part(m / np.trace(m).real)


def random_channel(input_dims, ancilla_dims, traced, rng: np.random.Generator, output_dims=None) -> StinespringChannel:
    d = math.prod(input_dims) * math.prod(ancilla_dims)
    if output_dims is None:
        output_dims = tuple(input_dims) + tuple(ancilla_dims)
    return StinespringChannel(random_unitary(d, rng), tuple(input_dims), tuple(ancilla_dims), tuple(output_dims), tuple(traced))


# --------------------------------------------------------------------------
# one-way LOCC lower bounds


def _apply_measurement(t: np.ndarray, axis_row: int, axis_col: int, povm: np.ndarray) -> np.ndarray:
    """Replace the (row, col) pair of one subsystem by a classical outcome axis.

    ``t`` is an operator tensor; the result gets a new trailing outcome axis
    holding ``Tr(Lambda_x X)`` for each POVM element.
    """
    # sum_{a,b} povm[x, b, a] * t[..a(row).., ..b(col)..]
    out = np.tensordot(t, povm, axes=([axis_row, axis_col], [2, 1]))
    return out


def _locc_value(delta: np.ndarray, dims: Sequence[int], measured: Sequence[int], povms: Sequence[np.ndarray]) -> float:
    """``sum_x || Tr_M[(I ⊗ Lambda_x) delta] ||_1`` for the given measurements."""
    n = len(dims)
    t = delta.reshape(list(dims) + list(dims))
    # track axis positions as measured pairs get contracted away
    rows = list(range(n))
    cols = list(range(n, 2 * n))
    alive = list(range(2 * n))
    for sub, povm in zip(measured, povms):
        ar, ac = alive.index(rows[sub]), alive.index(cols[sub])
        t = _apply_measurement(t, ar, ac, povm)
        alive = [a for a in alive if a not in (rows[sub], cols[sub])] + [("x", sub)]
    keep = [i for i in range(n) if i not in measured]
    dk = math.prod(dims[i] for i in keep)
    n_out = t.size // (dk * dk)
    # remaining order: kept rows, kept cols, outcome axes
    blocks = t.reshape(dk, dk, n_out).transpose(2, 0, 1)
    blocks = (blocks + np.conj(np.swapaxes(blocks, 1, 2))) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(blocks))))


def _fixed_families(d: int) -> list[np.ndarray]:
    """Deterministic measurement families tried before any search."""
    fams = [np.eye(d, dtype=complex)]
    f = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d) / np.sqrt(d)
    fams.append(f)
    out = [np.stack([np.outer(u[:, i], u[:, i].conj()) for i in range(d)]) for u in fams]
    if d == 2:
        out.extend(_chsh_family())
    return out


def _chsh_family() -> list[np.ndarray]:
    """Bob-side CHSH measurements: each observable alone and their fair mixture."""
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    obs = [(z + x) / np.sqrt(2), (z - x) / np.sqrt(2)]
    projs = [[(np.eye(2) + s * o) / 2 for s in (1, -1)] for o in obs]
    fams = [np.stack(p) for p in projs]
    fams.append(np.stack([p / 2 for pair in projs for p in pair]))
    return fams


def _group(delta: np.ndarray, dims: Sequence[int], parties: Sequence[Sequence[int]]) -> tuple[np.ndarray, list[int]]:
    order = [i for g in parties for i in g]
    if sorted(order) != list(range(len(dims))):
        raise ValidationError(f"parties {parties} do not partition {len(dims)} subsystems")
    perm = [0] * len(order)
    for pos, i in enumerate(order):
        perm[i] = pos
    moved = la.permute_subsystems(delta, dims, perm)
    return moved, [math.prod(dims[i] for i in g) for g in parties]


def locc_lower_bound(
    rho: StateLike,
    sigma: StateLike,
    parties: Sequence[Sequence[int]],
    budget: int = 300,
    seed: int = 0,
    dims=None,
) -> float:
    """Lower bound on the one-way LOCC distance with parties 2..l measuring.

    ``parties`` groups subsystem indices; the first group keeps its quantum
    system, every other group applies a quantum-to-classical channel.  The
    bound is the best value over computational, Fourier and (for qubits)
    CHSH measurements, followed by a seeded Nelder-Mead search over
    projective measurements limited to ``budget`` objective evaluations.
    """
    a, b = as_matrix(rho), as_matrix(sigma)
    _check_same(a, b)
    dims = _dims_of(rho, dims)
    if len(parties) < 2:
        raise ValidationError("need at least two parties")
    delta, gdims = _group(a - b, dims, parties)
    measured = list(range(1, len(gdims)))

    best = 0.0
    best_povms = None
    fam_lists = [_fixed_families(gdims[j]) for j in measured]
    for combo in _product(fam_lists):
        val = _locc_value(delta, gdims, measured, combo)
        if val > best + 1e-15:
            best, best_povms = val, combo
    if budget <= 0 or best_povms is None and not measured:
        return best

    sizes = [gdims[j] ** 2 for j in measured]

    def povms_from(theta):
        out, pos = [], 0
        for j, s in zip(measured, sizes):
            u = la.unitary_from_hermitian(la.hermitian_from_params(theta[pos : pos + s], gdims[j]))
            out.append(np.stack([np.outer(u[:, i], u[:, i].conj()) for i in range(gdims[j])]))
            pos += s
        return out

    rng = np.random.default_rng(seed)
    n_restarts = max(1, budget // 150)
    per_restart = max(1, budget // n_restarts)
    nparam = sum(sizes)
    for _ in range(n_restarts):
        x0 = rng.normal(scale=1.0, size=nparam)
        res = minimize(
            lambda th: -_locc_value(delta, gdims, measured, povms_from(th)),
            x0,
            method="Nelder-Mead",
            options={"maxfev": per_restart, "xatol": 1e-10, "fatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return best


def _product(lists):
    if not lists:
        yield []
        return
    head, *tail = lists
    for item in head:
        for rest in _product(tail):
            yield [item] + rest


def one_way_locc_distance_lower(
    rho: StateLike,
    sigma: StateLike,
    cut: tuple[Sequence[int], Sequence[int]] | None = None,
    budget: int = 300,
    seed: int = 0,
    dims=None,
) -> float:
    """Certified lower bound on ``||rho - sigma||_{1-LOCC}``, B measuring.

    ``cut`` is ``(A_subsystems, B_subsystems)``; by default the first
    subsystem is A and the rest B.
    """
    dims = _dims_of(rho, dims)
    if cut is None:
        if len(dims) < 2:
            raise ValidationError("bipartite cut needs at least two subsystems")
        cut = ([0], list(range(1, len(dims))))
    cut = [list(cut[0]), list(cut[1])]
    if not cut[0] or not cut[1]:
        raise ValidationError(f"invalid cut {cut}")
    return locc_lower_bound(rho, sigma, cut, budget=budget, seed=seed, dims=dims)
