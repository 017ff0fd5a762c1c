"""k-extendibility: canonical extensions, permutation tests, separability tools.

Extension states live on ``A ⊗ B_1 ⊗ ... ⊗ B_k`` with ``B_1`` the original
system.  All permutations act on the B slots only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, nnls

from . import linalg as la
from .errors import DimensionMismatchError, InvalidGapError, ValidationError
from .qstate import DensityMatrix, PureState, as_matrix, fidelity

__all__ = [
    "SeparableDecomposition",
    "ExtensionState",
    "canonical_k_extension",
    "canonical_extension_purification",
    "slot_permutation",
    "transposition_residuals",
    "is_k_extension",
    "symmetrize",
    "symmetrization_channel",
    "symmetric_projector",
    "symmetric_dim",
    "permutation_test_accept_prob",
    "max_k_extendible_fidelity",
    "lemma1_k",
    "prop1_bound",
    "ppt_check",
    "ppt_min_eigenvalue",
    "distance_to_separable",
    "SeparableFit",
    "gilbert_separable_fit",
]


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if abs(n - 1) > 1e-10:
        raise ValidationError(f"factor norm {n!r} != 1")
    return v


@dataclass(frozen=True)
class SeparableDecomposition:
    """``sum_x p(x) |psi_x><psi_x| ⊗ |phi_x><phi_x|`` with pure factors."""

    weights: np.ndarray
    factors: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or w.size != len(self.factors):
            raise ValidationError("weights and factors must be nonempty and of equal length")
        if np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-10:
            raise ValidationError("weights must form a probability vector")
        facs = tuple((_unit(a), _unit(b)) for a, b in self.factors)
        da, db = facs[0][0].size, facs[0][1].size
        if any(a.size != da or b.size != db for a, b in facs):
            raise ValidationError("all factors must share dimensions")
        if w.size > (da * db) ** 2:
            raise ValidationError("more terms than the Caratheodory bound allows")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))
        object.__setattr__(self, "factors", facs)

    @property
    def dims(self) -> tuple[int, int]:
        a, b = self.factors[0]
        return (a.size, b.size)

    def __len__(self) -> int:
        return len(self.factors)

    def state(self) -> DensityMatrix:
        m = sum(p * np.kron(np.outer(a, a.conj()), np.outer(b, b.conj())) for p, (a, b) in zip(self.weights, self.factors))
        return DensityMatrix.coerce(m, self.dims)


@dataclass(frozen=True)
class ExtensionState:
    """A candidate k-extension on ``A ⊗ B_1 ⊗ ... ⊗ B_k``.

    ``marginal`` is the ``A ⊗ B_1`` reduced state, fixed at construction.
    ``extended`` names the party whose system is copied (always B here).
    """

    state: DensityMatrix
    k: int
    extended: int = 1
    marginal: DensityMatrix = None

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be at least 1")
        dims = self.state.dims
        if len(dims) != self.k + 1 or len(set(dims[1:])) != 1:
            raise DimensionMismatchError(f"extension dims {dims} do not match A ⊗ B^{self.k}")
        if self.extended != 1:
            raise ValidationError("bipartite extensions copy party B (index 1)")
        if self.marginal is None:
            object.__setattr__(self, "marginal", self.state.ptrace([0, 1]))

    @property
    def dims(self) -> tuple[int, int]:
        return self.state.dims[0], self.state.dims[1]


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")


def canonical_k_extension(d: SeparableDecomposition, k: int) -> ExtensionState:
    """``sum_x p(x) psi_x ⊗ phi_x^{⊗k}``."""
    _check_k(k)
    da, db = d.dims
    total = la.check_dim(da * db**k, "k-extension dimension")
    m = np.zeros((total, total), dtype=complex)
    for p, (a, b) in zip(d.weights, d.factors):
        v = a
        for _ in range(k):
            v = np.kron(v, b)
        m += p * np.outer(v, v.conj())
    st = DensityMatrix.coerce(m, (da,) + (db,) * k)
    return ExtensionState(st, k, 1, d.state())


def canonical_extension_purification(d: SeparableDecomposition, k: int) -> PureState:
    """``sum_x sqrt(p(x)) |x>_R' |psi_x>_A |phi_x>^{⊗k}``, flag register first."""
    _check_k(k)
    da, db = d.dims
    n = len(d)
    total = la.check_dim(n * da * db**k, "extension purification dimension")
    psi = np.zeros(total, dtype=complex)
    for x, (p, (a, b)) in enumerate(zip(d.weights, d.factors)):
        v = np.zeros(n)
        v[x] = 1.0
        v = np.kron(v, a)
        for _ in range(k):
            v = np.kron(v, b)
        psi += math.sqrt(p) * v
    return PureState(psi / np.linalg.norm(psi), (n, da) + (db,) * k)


def slot_permutation(n_sub: int, slots: Sequence[int], perm: Sequence[int]) -> list[int]:
    """Full subsystem permutation moving ``slots[j]`` to ``slots[perm[j]]``."""
    full = list(range(n_sub))
    for j, p in enumerate(perm):
        full[slots[j]] = slots[p]
    return full


def _adjacent(k: int) -> list[tuple[int, ...]]:
    out = []
    for i in range(k - 1):
        p = list(range(k))
        p[i], p[i + 1] = p[i + 1], p[i]
        out.append(tuple(p))
    return out


def transposition_residuals(m: np.ndarray, dims: Sequence[int], slots: Sequence[int]) -> list[float]:
    """``||W m W^dag - m||_1`` for each adjacent transposition of the slots."""
    out = []
    for p in _adjacent(len(slots)):
        full = slot_permutation(len(dims), slots, p)
        out.append(la.trace_norm(la.permute_subsystems(m, dims, full) - m))
    return out


def is_k_extension(omega, rho: DensityMatrix, tol: float = 1e-9) -> bool:
    """Permutation invariance over the B slots and the right ``A ⊗ B_1`` marginal."""
    st = omega.state if isinstance(omega, ExtensionState) else omega
    dims = st.dims
    if len(dims) < 2 or tuple(dims[:2]) != tuple(rho.dims) and math.prod(dims[:2]) != rho.dim:
        raise DimensionMismatchError(f"extension dims {dims} vs state dims {rho.dims}")
    if math.prod(dims[:2]) != rho.dim:
        raise DimensionMismatchError(f"extension dims {dims} vs state dims {rho.dims}")
    slots = list(range(1, len(dims)))
    if any(r > tol for r in transposition_residuals(st.matrix, dims, slots)):
        return False
    marg = la.partial_trace(st.matrix, dims, [0, 1])
    return la.trace_norm(marg - rho.matrix) <= tol


def symmetrize(m: np.ndarray, dims: Sequence[int], slots: Sequence[int]) -> np.ndarray:
    """``(1/k!) sum_pi W^pi m W^pi^dag`` over permutations of ``slots``."""
    k = len(slots)
    acc = np.zeros_like(m, dtype=complex)
    for p in itertools.permutations(range(k)):
        acc += la.permute_subsystems(m, dims, slot_permutation(len(dims), slots, p))
    return acc / math.factorial(k)


def symmetrization_channel(sigma: DensityMatrix, k: int | None = None) -> DensityMatrix:
    """Random relabeling of the B slots followed by discarding ``B_2..B_k``.

    Only the slot that lands in ``B_1`` matters, so the average over ``k!``
    permutations collapses to the mean of the ``k`` single-slot marginals.
    """
    dims = sigma.dims
    if k is None:
        k = len(dims) - 1
    if len(dims) != k + 1 or len(set(dims[1:])) != 1:
        raise DimensionMismatchError(f"dims {dims} do not match A ⊗ B^{k}")
    acc = sum(la.partial_trace(sigma.matrix, dims, [0, i]) for i in range(1, k + 1))
    return DensityMatrix.coerce(acc / k, dims[:2])


def symmetric_dim(d: int, k: int) -> int:
    return math.comb(d + k - 1, k)


def symmetric_projector(d: int, k: int) -> np.ndarray:
    """``(1/k!) sum_pi W^pi`` on ``(C^d)^{⊗k}``."""
    total = la.check_dim(d**k, "symmetric projector dimension")
    acc = np.zeros((total, total), dtype=complex)
    for p in itertools.permutations(range(k)):
        acc += la.permutation_unitary(p, d)
    return acc / math.factorial(k)


def _trace_with_row_perm(m: np.ndarray, dims: Sequence[int], full: Sequence[int]) -> complex:
    """``Tr[W m]`` where ``W`` permutes subsystems by ``full``."""
    n = len(dims)
    inv = [0] * n
    for j, p in enumerate(full):
        inv[p] = j
    t = m.reshape(list(dims) + list(dims))
    # row indices of W m are the permuted row indices of m
    t = t.transpose(inv + list(range(n, 2 * n)))
    d = m.shape[0]
    return np.trace(t.reshape(d, d))


def permutation_test_accept_prob(tau, k: int, slots: Sequence[int] | None = None, dims=None) -> float:
    """``Tr[P_sym tau]`` with the symmetrizer acting on the listed B slots.

    By default the last ``k`` subsystems of ``tau`` are the slots and any
    leading subsystems are spectators.
    """
    m = as_matrix(tau)
    dims = tuple(dims) if dims is not None else getattr(tau, "dims", (m.shape[0],))
    if slots is None:
        slots = list(range(len(dims) - k, len(dims)))
    slots = list(slots)
    if len(slots) != k or min(slots) < 0 or max(slots) >= len(dims):
        raise DimensionMismatchError(f"{k} slots not available in dims {dims}")
    if len({dims[s] for s in slots}) != 1:
        raise DimensionMismatchError("slot dimensions differ")
    acc = 0.0
    for p in itertools.permutations(range(k)):
        acc += _trace_with_row_perm(m, dims, slot_permutation(len(dims), slots, p)).real
    return float(np.clip(acc / math.factorial(k), 0.0, 1.0))


# --------------------------------------------------------------------------
# maximum k-extendible fidelity


def _slot_views(t: np.ndarray, da: int, db: int, k: int) -> list[np.ndarray]:
    """Matrices ``M_i`` with rows ``(a, b_i)`` and columns (other slots, purifier)."""
    q = t.size // (da * db**k)
    tt = t.reshape((da,) + (db,) * k + (q,))
    out = []
    for i in range(1, k + 1):
        rest = [j for j in range(1, k + 1) if j != i]
        out.append(tt.transpose([0, i] + rest + [k + 1]).reshape(da * db, -1))
    return out


def _slot_adjoint(blocks: Sequence[np.ndarray], da: int, db: int, k: int, q: int) -> np.ndarray:
    acc = np.zeros((da,) + (db,) * k + (q,), dtype=complex)
    for i, y in zip(range(1, k + 1), blocks):
        rest = [j for j in range(1, k + 1) if j != i]
        order = [0, i] + rest + [k + 1]
        inv = np.argsort(order)
        acc += y.reshape([da, db] + [db] * (k - 1) + [q]).transpose(inv)
    return acc.reshape(-1)


def _seesaw_value(sqrt_rho, t, da, db, k):
    blocks = _slot_views(t, da, db, k)
    m_o = np.hstack(blocks) / math.sqrt(k)
    x = sqrt_rho @ m_o
    p, s, qh = np.linalg.svd(x, full_matrices=False)
    return float(np.sum(s)), p, qh


def _seesaw_step(sqrt_rho, p, qh, da, db, k, q):
    """Normalized adjoint image of the polar factor, or None at a dead end."""
    y = sqrt_rho @ (p @ qh)
    t = _slot_adjoint(np.split(y / math.sqrt(k), k, axis=1), da, db, k, q)
    nrm = np.linalg.norm(t)
    return t / nrm if nrm > 0 else None


def _lbfgs_ascent(sqrt_rho, t0, da, db, k, max_iter):
    """Maximize ``||sqrt(rho) M(t/|t|)||_1`` with L-BFGS on real coordinates."""
    n = t0.size
    q = n // (da * db**k)

    def neg(x):
        t = x[:n] + 1j * x[n:]
        nt = np.linalg.norm(t)
        u = t / nt
        val, p, qh = _seesaw_value(sqrt_rho, u, da, db, k)
        y = sqrt_rho @ (p @ qh)
        g = _slot_adjoint(np.split(y / math.sqrt(k), k, axis=1), da, db, k, q)
        # project out the radial direction; the objective is scale invariant
        g = (g - np.real(np.vdot(u, g)) * u) / nt
        return -val, -np.concatenate([g.real, g.imag])

    x0 = np.concatenate([t0.real, t0.imag])
    res = minimize(neg, x0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter, "ftol": 1e-16, "gtol": 1e-12})
    t = res.x[:n] + 1j * res.x[n:]
    return t / np.linalg.norm(t)


def max_k_extendible_fidelity(
    rho: DensityMatrix,
    k: int,
    restarts: int = 10,
    seed: int = 0,
    max_iter: int = 400,
    tol: float = 1e-13,
) -> tuple[float, ExtensionState]:
    """Best found ``max F(rho, sigma)`` over k-extendible ``sigma``.

    Every k-extendible state is the image of some state ``tau`` on
    ``A ⊗ B^k`` under the slot-averaging channel, so the search runs over
    purifications ``|t>`` of ``tau``, maximizing ``||sqrt(rho) M(t)||_1 =
    sqrt(F)`` where ``M(t)`` stacks the single-slot reshapes of ``t``.  Each
    restart runs L-BFGS on the sphere and then seesaw rounds, which take the
    polar factor of ``sqrt(rho) M(t)`` and move ``t`` to the normalized
    adjoint image of that factor; the seesaw never decreases the objective.  The witness is the slot symmetrization of ``tau``, whose
    marginal is exactly the channel output; the returned value is the
    fidelity recomputed against that witness.
    """
    _check_k(k)
    if len(rho.dims) != 2:
        raise ValidationError("max_k_extendible_fidelity needs a bipartite state")
    da, db = rho.dims
    big = la.check_dim(da * db**k, "extension dimension")
    q = big
    la.check_dim(big * q, "extension purification dimension")
    sqrt_rho = la.psd_sqrt(rho.matrix)
    rng = np.random.default_rng(seed)
    best_val, best_t = -1.0, None
    for _ in range(max(1, restarts)):
        t = rng.standard_normal(big * q) + 1j * rng.standard_normal(big * q)
        t = _lbfgs_ascent(sqrt_rho, t / np.linalg.norm(t), da, db, k, max_iter)
        val, p, qh = _seesaw_value(sqrt_rho, t, da, db, k)
        for _ in range(max_iter):
            t_new = _seesaw_step(sqrt_rho, p, qh, da, db, k, q)
            if t_new is None:
                break
            new_val, p_new, qh_new = _seesaw_value(sqrt_rho, t_new, da, db, k)
            if new_val - val <= tol:
                if new_val > val:
                    t, val = t_new, new_val
                break
            t, val, p, qh = t_new, new_val, p_new, qh_new
        if val > best_val:
            best_val, best_t = val, t
    tmat = best_t.reshape(big, q)
    tau = tmat @ la.dagger(tmat)
    dims = (da,) + (db,) * k
    witness_m = symmetrize(tau, dims, list(range(1, k + 1)))
    witness = DensityMatrix.coerce(witness_m, dims)
    ext = ExtensionState(witness, k)
    value = fidelity(rho, ext.marginal)
    return float(np.clip(value, 0.0, 1.0)), ext


# --------------------------------------------------------------------------
# bound formulas


def lemma1_k(eps: float, delta: float, dim_a: int) -> int:
    """``max(ceil(16 ln2 log2|A| / (eps - delta)**2), 1)``."""
    if not 0 < delta < eps:
        raise InvalidGapError(f"need 0 < delta < eps, got delta={delta}, eps={eps}")
    if dim_a < 1:
        raise ValidationError("dim_a must be positive")
    val = 16 * math.log(2) * math.log2(dim_a) / (eps - delta) ** 2
    return max(int(math.ceil(val)), 1)


def prop1_bound(k: int, delta: float, dim_a: int) -> float:
    """``sqrt(16 ln2 log2|A| / k) + delta``."""
    _check_k(k)
    return math.sqrt(16 * math.log(2) * math.log2(dim_a) / k) + delta


# --------------------------------------------------------------------------
# separability tools


def _bipartite(rho, cut) -> tuple[np.ndarray, int, int]:
    m = as_matrix(rho)
    dims = tuple(getattr(rho, "dims", (m.shape[0],)))
    if cut is None:
        if len(dims) != 2:
            raise ValidationError(f"a cut is required for dims {dims}")
        return m, dims[0], dims[1]
    a, b = list(cut[0]), list(cut[1])
    if not a or not b or sorted(a + b) != list(range(len(dims))):
        raise ValidationError(f"invalid cut {cut} for dims {dims}")
    grouped = DensityMatrix.coerce(m, dims).regroup([a, b]) if a + b != list(range(len(dims))) else None
    if grouped is not None:
        return grouped.matrix, grouped.dims[0], grouped.dims[1]
    return m, math.prod(dims[i] for i in a), math.prod(dims[i] for i in b)


def ppt_min_eigenvalue(rho, cut=None) -> tuple[float, np.ndarray]:
    m, da, db = _bipartite(rho, cut)
    w, v = la.eigh(la.partial_transpose(m, [da, db], [1]))
    return float(w[0]), v[:, 0]


def ppt_check(rho, cut=None) -> bool:
    """Positive partial transpose over B (Horodecki-exact for 2x2 and 2x3)."""
    return ppt_min_eigenvalue(rho, cut)[0] >= -la.TOL_PSD


@dataclass(frozen=True)
class SeparableFit:
    """Separable approximation found by the Gilbert iteration."""

    sigma: np.ndarray
    weights: np.ndarray
    atoms_a: np.ndarray
    atoms_b: np.ndarray
    iterations: int

    def decomposition(self) -> SeparableDecomposition:
        keep = self.weights > 0
        w = self.weights[keep] / self.weights[keep].sum()
        return SeparableDecomposition(w, tuple(zip(self.atoms_a[keep], self.atoms_b[keep])))


def _product_lmo(g: np.ndarray, da: int, db: int, rng, n_starts: int, warm: list, inner: int = 50):
    """Approximately maximize ``<a b| g |a b>`` over unit product vectors."""
    gt = g.reshape(da, db, da, db)
    b = rng.standard_normal((n_starts, db)) + 1j * rng.standard_normal((n_starts, db))
    if warm:
        b = np.vstack([np.array(warm), b])
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    prev = None
    for _ in range(inner):
        ga = np.einsum("nj,ijkl,nl->nik", b.conj(), gt, b)
        ga = (ga + np.conj(np.swapaxes(ga, 1, 2))) / 2
        _, va = np.linalg.eigh(ga)
        a = va[:, :, -1]
        gb = np.einsum("ni,ijkl,nk->njl", a.conj(), gt, a)
        gb = (gb + np.conj(np.swapaxes(gb, 1, 2))) / 2
        wb, vb = np.linalg.eigh(gb)
        b = vb[:, :, -1]
        val = wb[:, -1]
        if prev is not None and np.max(np.abs(val - prev)) < 1e-15:
            break
        prev = val
    i = int(np.argmax(val))
    return float(val[i]), a[i], b[i]


def _fit_weights(rho_vec: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    """Least-squares simplex weights via NNLS with a heavy sum-to-one row."""
    big = 1e4
    a = np.vstack([atoms.real, atoms.imag, big * np.ones((1, atoms.shape[1]))])
    b = np.concatenate([rho_vec.real, rho_vec.imag, [big]])
    w, _ = nnls(a, b, maxiter=50 * atoms.shape[1] + 100)
    s = w.sum()
    return w / s if s > 0 else np.full(atoms.shape[1], 1.0 / atoms.shape[1])


def gilbert_separable_fit(
    rho,
    cut=None,
    budget: int = 2000,
    seed: int = 0,
    target: float = 1e-7,
    n_starts: int = 4,
    gap_rtol: float = 1e-6,
) -> SeparableFit:
    """Fully corrective Frank-Wolfe on ``||rho - sigma||_F**2`` over product states.

    Each round calls the product-state linear oracle on the gradient
    ``rho - sigma``, adds the new atom, re-solves the simplex weights of all
    atoms, and drops zero-weight atoms.  ``budget`` caps the rounds; the
    loop also stops once the trace distance reaches ``target`` or the
    Frank-Wolfe gap falls below ``gap_rtol`` times the current objective.
    """
    m, da, db = _bipartite(rho, cut)
    d = da * db
    rho_vec = m.reshape(-1)
    rng = np.random.default_rng(seed)
    # seed atom: best product state for rho itself
    _, a0, b0 = _product_lmo(m, da, db, rng, n_starts, [])
    atoms_a, atoms_b = [a0], [b0]
    vecs = [np.outer(np.kron(a0, b0), np.kron(a0, b0).conj()).reshape(-1)]
    w = np.array([1.0])
    sigma = vecs[0].reshape(d, d)
    it = 0
    for it in range(1, budget + 1):
        g = m - sigma
        val, a, b = _product_lmo(g, da, db, rng, n_starts, atoms_b[-3:])
        gap = val - np.real(np.vdot(sigma.reshape(-1), g.reshape(-1)))
        # the gap bounds the excess Hilbert-Schmidt objective
        if gap <= max(1e-14, gap_rtol * np.vdot(g.reshape(-1), g.reshape(-1)).real):
            break
        atoms_a.append(a)
        atoms_b.append(b)
        v = np.kron(a, b)
        vecs.append(np.outer(v, v.conj()).reshape(-1))
        mat = np.array(vecs).T
        w = _fit_weights(rho_vec, mat)
        keep = w > 1e-13
        atoms_a = [x for x, k in zip(atoms_a, keep) if k]
        atoms_b = [x for x, k in zip(atoms_b, keep) if k]
        vecs = [x for x, k in zip(vecs, keep) if k]
        w = w[keep] / w[keep].sum()
        sigma = (np.array(vecs).T @ w).reshape(d, d)
        if it % 10 == 0 and la.trace_norm(m - sigma) <= target:
            break
    return SeparableFit(la.hermitian_part(sigma), w, np.array(atoms_a), np.array(atoms_b), it)


def distance_to_separable(rho, cut=None, budget: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Bracket ``min_{sigma in SEP} ||rho - sigma||_1`` as ``(upper, lower)``.

    The upper value is attained by the Gilbert fit.  The lower value comes
    from the partial-transpose witness ``W = (v v^dag)^{T_B}`` built on the
    most negative eigenvector ``v``: ``Tr W sigma >= 0`` on separable states
    while ``Tr W rho = lambda_min``, so the trace distance is at least
    ``|lambda_min| / ||W||_inf``.
    """
    m, da, db = _bipartite(rho, cut)
    fit = gilbert_separable_fit(DensityMatrix.coerce(m, (da, db)), None, budget, seed)
    upper = la.trace_norm(m - fit.sigma)
    lam, v = ppt_min_eigenvalue(DensityMatrix.coerce(m, (da, db)))
    lower = 0.0
    if lam < 0:
        wit = la.partial_transpose(np.outer(v, v.conj()), [da, db], [1])
        lower = -lam / float(np.max(np.abs(np.linalg.eigvalsh(la.hermitian_part(wit)))))
    return float(upper), float(min(lower, upper))
