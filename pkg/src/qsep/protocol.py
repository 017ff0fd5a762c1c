"""Exact simulation of the permutation-test interactive proofs.

Two-message protocol (state version): the verifier runs the circuit, sends
the reference R to the prover, who applies ``P1`` to R and fresh ancillas
and returns ``k - 1`` extension slots.  The verifier then runs the
permutation test on ``B_1..B_k``: a ``k!``-dimensional control qudit is put
in uniform superposition by a Fourier transform, controls ``W^pi`` on the
slots, is Fourier-inverted and measured; outcome 0 accepts.

Three-message protocol (channel version): the prover first prepares the
channel input (``P1``), the verifier runs the channel and forwards R, and the
prover's ``P2`` produces the extension slots as above.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import linalg as la
from .circuit import MixedCircuit, _inject_inputs, evolve, run_circuit
from .errors import DimensionLimitError, DimensionMismatchError, ValidationError
from .extend import SeparableDecomposition, canonical_extension_purification, slot_permutation, symmetric_dim
from .qstate import DensityMatrix, PureState, _complete_unitary, uhlmann_unitary

__all__ = [
    "ProverStrategy",
    "Checkpoint",
    "ProtocolRun",
    "DEFAULT_K_LIMIT",
    "get_k_limit",
    "set_k_limit",
    "verifier_purification",
    "identity_prover_strategy",
    "honest_prover_strategy",
    "optimal_prover_strategy",
    "run_qip2_protocol",
    "optimal_acceptance_probability",
    "completeness_bound",
    "soundness_bound",
    "channel_input_strategy",
    "honest_channel_strategy",
    "run_qip3_channel_protocol",
    "run_permutation_test",
]

DEFAULT_K_LIMIT = 4


@dataclass(frozen=True)
class ProverStrategy:
    """Prover unitaries, one per message the prover sends.

    Stage ``i`` acts on the received register followed by fresh ancillas of
    dims ``ancilla_dims[i]``; ``output_dims[i]`` factorizes its output.  For
    the final stage the output is ``(R', slot, ..., slot)``: a kept register
    followed by the returned extension slots.  In the channel protocol the
    first stage acts on ancillas only and outputs ``(memory, input)``.
    """

    unitaries: tuple[np.ndarray, ...]
    ancilla_dims: tuple[tuple[int, ...], ...]
    output_dims: tuple[tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "ancilla_dims", tuple(tuple(int(x) for x in a) for a in self.ancilla_dims))
        object.__setattr__(self, "output_dims", tuple(tuple(int(x) for x in o) for o in self.output_dims))
        if not (len(us) == len(self.ancilla_dims) == len(self.output_dims)) or not us:
            raise ValidationError("one unitary, ancilla spec and output spec per stage")
        for u, o in zip(us, self.output_dims):
            if not la.is_unitary(u, 1e-10):
                raise ValidationError("prover stage is not unitary")
            if math.prod(o) != u.shape[0]:
                raise ValidationError("prover output dims do not match its unitary")


class Checkpoint(NamedTuple):
    label: str
    state: object


@dataclass(frozen=True)
class ProtocolRun:
    acceptance_probability: float
    transcript: tuple[Checkpoint, ...]
    k: int

    def checkpoint(self, label: str):
        for c in self.transcript:
            if c.label == label:
                return c.state
        raise KeyError(label)


def completeness_bound(delta_c: float) -> float:
    """``1 - 2 sqrt(delta_c)`` clamped to ``[0, 1]``."""
    if delta_c < 0:
        raise ValidationError("delta_c must be nonnegative")
    return float(min(1.0, max(0.0, 1 - 2 * math.sqrt(delta_c))))


def soundness_bound(delta_s: float) -> float:
    """``1 - delta_s**2 / 8``."""
    if not 0 <= delta_s <= 2:
        raise ValidationError("delta_s must lie in [0, 2]")
    return 1 - delta_s**2 / 8


# --------------------------------------------------------------------------
# shared pieces


def _group_vector(psi: np.ndarray, dims: Sequence[int], groups: Sequence[Sequence[int]]) -> tuple[np.ndarray, list[int]]:
    t = np.asarray(psi).reshape(list(dims))
    order = [i for g in groups for i in g]
    t = t.transpose(order + [i for i in range(len(dims)) if i not in order])
    return t.reshape(-1), [math.prod(dims[i] for i in g) for g in groups]


def verifier_purification(c: MixedCircuit) -> tuple[np.ndarray, list[int]]:
    """Circuit output as a vector on ``(R, party_1, ..., party_l)``."""
    out = run_circuit(c)
    part = c.partition
    return _group_vector(out.pre_trace.amplitudes, c.wire_dims, [list(part.R)] + [list(p) for p in part.parties])


def _dft(n: int) -> np.ndarray:
    w = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    return w / math.sqrt(n)


def _group_elements(slot_groups: Sequence[Sequence[int]]):
    """Product group of per-group slot permutations, group by group."""
    per = [list(itertools.permutations(range(len(g)))) for g in slot_groups]
    return list(itertools.product(*per))


def run_permutation_test(psi: np.ndarray, dims: Sequence[int], slot_groups: Sequence[Sequence[int]]) -> tuple[float, np.ndarray]:
    """Acceptance of the controlled-permutation test with a qudit control.

    The control starts in ``|0>``, goes through the Fourier transform,
    controls ``W^g`` on the slots for each group element ``g``, and is
    Fourier-inverted.  The control is tracked branch by branch: the
    accepting amplitude is ``sum_g F^dag[0, g] F[g, 0] W^g |psi>``.
    Returns the acceptance probability and the (unnormalized) accepting
    branch.
    """
    elems = _group_elements(slot_groups)
    n = len(elems)
    f = _dft(n)
    fd = la.dagger(f)
    n_sub = len(dims)
    acc = np.zeros(psi.shape, dtype=complex)
    for idx, g in enumerate(elems):
        full = list(range(n_sub))
        for slots, p in zip(slot_groups, g):
            sp = slot_permutation(n_sub, slots, p)
            full = [sp[full[j]] for j in range(n_sub)]
        acc += fd[0, idx] * f[idx, 0] * la.permute_subsystems(psi, dims, full)
    prob = float(np.vdot(acc, acc).real)
    return min(1.0, max(0.0, prob)), acc


def _apply_prover(psi: np.ndarray, d_x: int, rest: int, u: np.ndarray, d_anc: int) -> np.ndarray:
    """``(U ⊗ I)(psi ⊗ |0>_anc)`` with psi ordered ``(X, rest)``; output ``(U-out, rest)``."""
    m = psi.reshape(d_x, rest)
    if u.shape[0] != d_x * d_anc:
        raise DimensionMismatchError(f"prover unitary of size {u.shape[0]} does not act on {d_x}x{d_anc}")
    # |0>_anc sits after X, so only columns x*d_anc of U are used
    cols = u[:, ::d_anc] if d_anc > 1 else u
    return (cols @ m).reshape(-1)


def _finish(psi: np.ndarray, d_x: int, party_dims: Sequence[int], u, anc: Sequence[int], out_dims: Sequence[int], k: int, extended: Sequence[int]):
    """Prover's last move plus the permutation test.

    ``psi`` is ordered ``(X, parties...)``.  The prover unitary turns
    ``X ⊗ anc`` into ``(R', copies...)`` where the copies come copy-major:
    copy 2 of every extended party, then copy 3, and so on.
    """
    la.check_dim(psi.size * math.prod(anc), "post-prover state dimension")
    rest = math.prod(party_dims)
    post = _apply_prover(psi, d_x, rest, u, math.prod(anc))
    n_ext = len(extended)
    d_rp = out_dims[0]
    slot_dims = list(out_dims[1:])
    expected = [party_dims[j] for _ in range(k - 1) for j in extended]
    if slot_dims != expected:
        raise DimensionMismatchError(f"prover returns slots {slot_dims}, verifier expects {expected}")
    # reorder (R', copies..., parties...) -> (R', parties..., copies...)
    l = len(party_dims)
    n_copies = len(slot_dims)
    src_dims = [d_rp] + slot_dims + list(party_dims)
    perm = [0] + [1 + l + i for i in range(n_copies)] + [1 + i for i in range(l)]
    ordered = la.permute_subsystems(post, src_dims, perm)
    dims = [d_rp] + list(party_dims) + slot_dims
    # slot group for party j: original party axis followed by its copies
    groups = []
    for pos, j in enumerate(extended):
        groups.append([1 + j] + [1 + l + c * n_ext + pos for c in range(k - 1)])
    prob, branch = run_permutation_test(ordered, dims, groups)
    return prob, ordered, dims, branch


def _checkpoints(src, src_dims, post, post_dims, branch) -> tuple[Checkpoint, ...]:
    keep = list(range(1, len(post_dims)))
    view = la.reduced_density(post, post_dims, keep)
    return (
        Checkpoint("post_circuit", PureState(src / np.linalg.norm(src), src_dims)),
        Checkpoint("post_prover", PureState(post / np.linalg.norm(post), post_dims)),
        Checkpoint("verifier_view", DensityMatrix.coerce(view, post_dims[1:])),
        Checkpoint("accept_branch", branch),
    )


_k_limit: int | None = None


def get_k_limit() -> int:
    return DEFAULT_K_LIMIT if _k_limit is None else _k_limit


def set_k_limit(limit: int | None) -> None:
    """Override the largest simulated k; ``None`` restores the default."""
    global _k_limit
    if limit is not None and int(limit) < 2:
        raise ValidationError("the k limit must be at least 2")
    _k_limit = None if limit is None else int(limit)


def _check_k(k: int) -> None:
    if int(k) != k or k < 2:
        raise ValidationError("the permutation test needs k >= 2")
    if k > get_k_limit():
        raise DimensionLimitError(f"k={k} exceeds the simulation limit {get_k_limit()}")


def _two_parties(c: MixedCircuit) -> None:
    if len(c.partition.parties) != 2:
        raise ValidationError("the bipartite protocol needs an A/B partition")


# --------------------------------------------------------------------------
# two-message protocol


def run_qip2_protocol(c: MixedCircuit, p: ProverStrategy, k: int) -> ProtocolRun:
    _check_k(k)
    _two_parties(c)
    return _run_state_protocol(c, p, k, [1])


def _run_state_protocol(c: MixedCircuit, p: ProverStrategy, k: int, extended: Sequence[int]) -> ProtocolRun:
    if len(p.unitaries) != 1:
        raise ValidationError("the two-message protocol takes a one-stage prover")
    psi, gd = verifier_purification(c)
    d_r, party_dims = gd[0], gd[1:]
    prob, post, dims, branch = _finish(psi, d_r, party_dims, p.unitaries[0], p.ancilla_dims[0], p.output_dims[0], k, extended)
    return ProtocolRun(prob, _checkpoints(psi, tuple(gd), post, tuple(dims), branch), k)


def identity_prover_strategy(c: MixedCircuit, k: int, extended: Sequence[int] = (1,)) -> ProverStrategy:
    """Prover keeps R and returns fresh ``|0>`` slots."""
    _check_k(k)
    d_r = c.reference_dim
    slots = [c.party_dims[j] for _ in range(k - 1) for j in extended]
    d = d_r * math.prod(slots)
    return ProverStrategy((np.eye(d),), (tuple(slots),), ((d_r,) + tuple(slots),), "identity")


def _uhlmann_stage(src: np.ndarray, d_x: int, target: np.ndarray, d_y: int, rest_dims: Sequence[int]) -> np.ndarray:
    """Unitary on the purifier mapping ``src`` (``X, rest``) toward ``target`` (``Y, rest``)."""
    if d_x != d_y:
        raise DimensionMismatchError(f"purifier dims differ: {d_x} vs {d_y}")
    dims = (d_x,) + tuple(rest_dims)
    return uhlmann_unitary(PureState(target, dims), PureState(src, dims), 0)


def _decomposition_target(d: SeparableDecomposition, k: int, d_junk: int) -> tuple[np.ndarray, int]:
    """``|0>_junk ⊗ |phi_k>`` reordered to ``(junk, flag, B_2..B_k, A, B_1)``."""
    phi = canonical_extension_purification(d, k)
    n, da, db = len(d), d.dims[0], d.dims[1]
    dims = [n, da] + [db] * k
    vec, _ = _group_vector(phi.amplitudes, dims, [[0]] + [[i] for i in range(3, k + 2)] + [[1], [2]])
    junk = np.zeros(d_junk)
    junk[0] = 1.0
    return np.kron(junk, vec), d_junk * n * db ** (k - 1)


def honest_prover_strategy(c: MixedCircuit, d: SeparableDecomposition, k: int) -> ProverStrategy:
    """Uhlmann unitary from ``|psi>_{RAB} ⊗ |0>`` to the canonical extension purification.

    The prover's ancilla has dims ``(flag, B, ..., B)`` so the two
    purifying systems, ``R ⊗ anc`` and ``junk ⊗ flag ⊗ B_2..B_k`` with a
    junk register of R's size, match.
    """
    _check_k(k)
    _two_parties(c)
    if tuple(c.party_dims) != tuple(d.dims):
        raise DimensionMismatchError(f"circuit parties {c.party_dims} vs decomposition {d.dims}")
    psi, gd = verifier_purification(c)
    d_r, (da, db) = gd[0], gd[1:]
    n = len(d)
    anc = (n,) + (db,) * (k - 1)
    d_anc = math.prod(anc)
    src = np.kron(psi.reshape(d_r, -1), np.eye(d_anc)[:, :1]).reshape(d_r, d_anc, da * db).reshape(-1)
    target, d_y = _decomposition_target(d, k, d_r)
    u = _uhlmann_stage(src, d_r * d_anc, target, d_y, (da, db))
    return ProverStrategy((u,), (anc,), ((d_r * n,) + (db,) * (k - 1),), "honest")


def _symmetrize_vector(w: np.ndarray, dims: Sequence[int], slot_groups) -> np.ndarray:
    return run_permutation_test(w, dims, slot_groups)[1]


def _bose_seesaw(sqrt_rho, da, db, k, m, rng, restarts, max_iter, tol):
    """Maximize ``||sqrt(rho) M(w)||_1`` over unit ``w`` in the symmetric subspace.

    ``w`` lives on ``(A, B_1..B_k, M)``; ``M(w)`` has rows ``(A, B_1)``.
    """
    dims = [da] + [db] * k + [m]
    groups = [list(range(1, k + 1))]
    size = math.prod(dims)
    best_val, best_w = -1.0, None
    for _ in range(max(1, restarts)):
        w = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        w = _symmetrize_vector(w, dims, groups)
        w /= np.linalg.norm(w)
        p, s, qh = np.linalg.svd(sqrt_rho @ w.reshape(da * db, -1), full_matrices=False)
        val = float(np.sum(s))
        for _ in range(max_iter):
            y = (sqrt_rho @ (p @ qh)).reshape(-1)
            w_new = _symmetrize_vector(y, dims, groups)
            nrm = np.linalg.norm(w_new)
            if nrm == 0:
                break
            w_new /= nrm
            p, s, qh = np.linalg.svd(sqrt_rho @ w_new.reshape(da * db, -1), full_matrices=False)
            new_val = float(np.sum(s))
            w = w_new
            if new_val - val <= tol:
                val = max(val, new_val)
                break
            val = new_val
        if val > best_val:
            best_val, best_w = val, w
    return best_val, best_w


def optimal_prover_strategy(c: MixedCircuit, k: int, restarts: int = 10, seed: int = 0, max_iter: int = 500, tol: float = 1e-13) -> ProverStrategy:
    """Best-found prover from the state-side characterization.

    The acceptance probability of the best prover equals the largest
    fidelity between ``rho_AB`` and the ``A ⊗ B_1`` marginal of a state
    supported on ``A ⊗ Sym^k(B)``.  A seesaw finds such a state ``w``
    (purified by a register ``M`` of size ``|A| dim Sym^k(B)``), and the
    prover unitary is the Uhlmann unitary that steers the verifier's
    purification onto ``|0>_junk ⊗ w``.
    """
    _check_k(k)
    _two_parties(c)
    psi, gd = verifier_purification(c)
    d_r, (da, db) = gd[0], gd[1:]
    m = da * symmetric_dim(db, k)
    la.check_dim(da * db**k * m, "optimal-prover search dimension")
    mat = psi.reshape(d_r, da * db)
    rho = mat.T @ mat.conj()
    sqrt_rho = la.psd_sqrt(la.hermitian_part(rho))
    rng = np.random.default_rng(seed)
    _, w = _bose_seesaw(sqrt_rho, da, db, k, m, rng, restarts, max_iter, tol)
    # w: (A, B_1, B_2..B_k, M) -> (M, B_2..B_k, A, B_1)
    wdims = [da, db] + [db] * (k - 1) + [m]
    vec, _ = _group_vector(w, wdims, [[k + 1]] + [[i] for i in range(2, k + 1)] + [[0], [1]])
    junk = np.zeros(d_r)
    junk[0] = 1.0
    target = np.kron(junk, vec)
    anc = (m,) + (db,) * (k - 1)
    d_anc = math.prod(anc)
    src = np.kron(psi.reshape(d_r, -1), np.eye(d_anc)[:, :1]).reshape(d_r, d_anc, da * db).reshape(-1)
    u = _uhlmann_stage(src, d_r * d_anc, target, d_r * m * db ** (k - 1), (da, db))
    return ProverStrategy((u,), (anc,), ((d_r * m,) + (db,) * (k - 1),), "optimal")


def optimal_acceptance_probability(c: MixedCircuit, k: int, restarts: int = 10, seed: int = 0) -> float:
    """Acceptance probability of :func:`optimal_prover_strategy`, simulated exactly."""
    return run_qip2_protocol(c, optimal_prover_strategy(c, k, restarts, seed), k).acceptance_probability


# --------------------------------------------------------------------------
# three-message protocol


def _channel_state(ch: MixedCircuit, p1: np.ndarray, mem_dim: int) -> tuple[np.ndarray, list[int]]:
    """Run ``P1|0>`` on (memory, input) through the channel; order ``(mem ⊗ R, parties)``."""
    if not ch.inputs:
        d_in = 1
    else:
        d_in = math.prod(ch.input_dims)
    if p1.shape[0] != mem_dim * d_in:
        raise DimensionMismatchError("first prover stage does not match memory and channel input")
    start = p1[:, 0].reshape(mem_dim, d_in)
    tensor = evolve(ch, _inject_inputs(ch, start.T))
    part = ch.partition
    dims = list(ch.wire_dims) + [mem_dim]
    groups = [[len(ch.wire_dims)] + list(part.R)] + [list(q) for q in part.parties]
    vec, gd = _group_vector(tensor.reshape(-1), dims, groups)
    return vec, gd


def run_qip3_channel_protocol(ch: MixedCircuit, p: ProverStrategy, k: int) -> ProtocolRun:
    """Prover prepares the channel input, verifier forwards R, prover extends."""
    _check_k(k)
    _two_parties(ch)
    if len(p.unitaries) != 2:
        raise ValidationError("the channel protocol takes a two-stage prover")
    mem_dim = p.output_dims[0][0]
    psi, gd = _channel_state(ch, p.unitaries[0], mem_dim)
    d_x, party_dims = gd[0], gd[1:]
    prob, post, dims, branch = _finish(psi, d_x, party_dims, p.unitaries[1], p.ancilla_dims[1], p.output_dims[1], k, [1])
    return ProtocolRun(prob, _checkpoints(psi, tuple(gd), post, tuple(dims), branch), k)


def _input_stage(ch: MixedCircuit, input_state: np.ndarray | None) -> tuple[np.ndarray, int]:
    d_in = math.prod(ch.input_dims) if ch.inputs else 1
    if input_state is None:
        input_state = np.eye(d_in)[0]
    v = np.asarray(input_state, dtype=complex).reshape(-1)
    if v.size % d_in:
        raise DimensionMismatchError("input state does not fit the channel input")
    mem = v.size // d_in
    # given on (input, memory); the stage outputs (memory, input)
    v = v.reshape(d_in, mem).T.reshape(-1)
    return _complete_unitary(v / np.linalg.norm(v)), mem


def channel_input_strategy(ch: MixedCircuit, k: int, input_state: np.ndarray | None = None) -> ProverStrategy:
    """Prover sends ``input_state`` (on input ⊗ memory) and returns fresh slots."""
    _check_k(k)
    p1, mem = _input_stage(ch, input_state)
    d_in = p1.shape[0] // mem
    d_x = mem * ch.reference_dim
    slots = (ch.party_dims[1],) * (k - 1)
    d = d_x * math.prod(slots)
    return ProverStrategy((p1, np.eye(d)), ((mem, d_in), slots), ((mem, d_in), (d_x,) + slots), "channel-identity")


def honest_channel_strategy(ch: MixedCircuit, d: SeparableDecomposition, k: int, input_state: np.ndarray | None = None) -> ProverStrategy:
    """Send ``input_state``, then Uhlmann-steer onto the canonical extension."""
    _check_k(k)
    _two_parties(ch)
    if tuple(ch.party_dims) != tuple(d.dims):
        raise DimensionMismatchError(f"channel parties {ch.party_dims} vs decomposition {d.dims}")
    p1, mem = _input_stage(ch, input_state)
    d_in = p1.shape[0] // mem
    psi, gd = _channel_state(ch, p1, mem)
    d_x, (da, db) = gd[0], gd[1:]
    n = len(d)
    anc = (n,) + (db,) * (k - 1)
    d_anc = math.prod(anc)
    src = np.kron(psi.reshape(d_x, -1), np.eye(d_anc)[:, :1]).reshape(d_x, d_anc, da * db).reshape(-1)
    target, d_y = _decomposition_target(d, k, d_x)
    u = _uhlmann_stage(src, d_x * d_anc, target, d_y, (da, db))
    return ProverStrategy((p1, u), ((mem, d_in), anc), ((mem, d_in), (d_x * n,) + (db,) * (k - 1)), "channel-honest")
