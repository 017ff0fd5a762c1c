"""Reductions from state and channel distinguishability to separability.

Given circuits ``c0``, ``c1`` whose outputs ``rho_0``, ``rho_1`` live on
the party wires (system S) and whose reference wires R purify them, the
reduction prepares

    (|00>_{AB} |psi_0>_{RS} + |11>_{AB} |psi_1>_{RS}) / sqrt(2)

traces out S and splits the rest as ``A : B R``.  Far-apart inputs decohere
the Bell pair into a separable state; nearly equal inputs leave it
entangled, which Bob can expose through a CHSH test after undoing the
reference with a controlled Uhlmann unitary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .circuit import Gate, MixedCircuit, Partition, run_circuit
from .errors import DimensionMismatchError, ValidationError
from .qstate import DensityMatrix, PureState, uhlmann_unitary

__all__ = [
    "ChshSettings",
    "PAULI_X",
    "PAULI_Z",
    "HADAMARD",
    "qsd_to_qsep",
    "qcd_to_qsep_channel",
    "separable_target",
    "separable_purification",
    "helstrom_isometry",
    "decoupling_unitary",
    "decoupled_state",
    "no_side_certificate",
    "chsh_value",
    "chsh_1locc_gap",
    "CLASSICAL_CHSH",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CLASSICAL_CHSH = 0.75


@dataclass(frozen=True)
class ChshSettings:
    """Two ``±1``-valued qubit observables per player."""

    alice: tuple[np.ndarray, np.ndarray]
    bob: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        al = tuple(np.asarray(o, dtype=complex) for o in self.alice)
        bo = tuple(np.asarray(o, dtype=complex) for o in self.bob)
        for o in al + bo:
            if o.shape != (2, 2) or not la.is_hermitian(o, 1e-10) or not la.is_unitary(o, 1e-10):
                raise ValidationError("CHSH observables must be Hermitian unitary qubit operators")
        if len(al) != 2 or len(bo) != 2:
            raise ValidationError("each player needs exactly two observables")
        object.__setattr__(self, "alice", al)
        object.__setattr__(self, "bob", bo)

    @classmethod
    def standard(cls) -> "ChshSettings":
        return cls((PAULI_Z, PAULI_X), ((PAULI_Z + PAULI_X) / math.sqrt(2), (PAULI_Z - PAULI_X) / math.sqrt(2)))

    def bob_povm(self) -> np.ndarray:
        """Bob's four-outcome measurement: uniform setting, then the ``±1`` projector."""
        return np.stack([(np.eye(2) + s * o) / 4 for o in self.bob for s in (1, -1)])


def _two_qubit(rho) -> np.ndarray:
    m = getattr(rho, "matrix", rho)
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"CHSH needs a two-qubit state, got shape {m.shape}")
    if isinstance(rho, DensityMatrix) and tuple(rho.dims) not in ((2, 2), (4,)):
        raise DimensionMismatchError(f"CHSH needs dims (2, 2), got {rho.dims}")
    return m


def chsh_value(rho, s: ChshSettings | None = None) -> float:
    """Winning probability ``1/2 + S/8`` with ``S = E00 + E01 + E10 - E11``."""
    m = _two_qubit(rho)
    s = s or ChshSettings.standard()
    e = [[np.trace(np.kron(a, b) @ m).real for b in s.bob] for a in s.alice]
    big_s = e[0][0] + e[0][1] + e[1][0] - e[1][1]
    return float(0.5 + big_s / 8)


def chsh_1locc_gap(rho, s: ChshSettings | None = None) -> float:
    """``||(p, 1-p) - (3/4, 1/4)||_1`` above the classical value, else 0.

    Every separable state wins with probability at most 3/4, and the game is
    played by a measurement on B followed by a measurement on A, so this is
    a one-way LOCC lower bound on the distance to any separable state.
    """
    p = chsh_value(rho, s)
    return float(2 * (p - CLASSICAL_CHSH)) if p > CLASSICAL_CHSH else 0.0


# --------------------------------------------------------------------------
# circuit constructions


def _controlled_copy(c: MixedCircuit, offset: int, ctrl: int, on_zero: bool) -> list[Gate]:
    gates = [Gate(f"{g.name}|c{int(not on_zero)}", tuple(t + offset for t in g.targets), g.matrix, (ctrl,) + tuple(x + offset for x in g.controls)) for g in c.gates]
    if on_zero and gates:
        flip = Gate("x", (ctrl,), PAULI_X)
        gates = [flip] + gates + [flip]
    return gates


def _check_pair(c0: MixedCircuit, c1: MixedCircuit) -> None:
    if c0.n_wires != c1.n_wires:
        raise DimensionMismatchError(f"wire-count mismatch: {c0.n_wires} vs {c1.n_wires}")
    if c0.wire_dims != c1.wire_dims:
        raise DimensionMismatchError("wire dimensions differ")
    if c0.partition.R != c1.partition.R or _s_wires(c0) != _s_wires(c1):
        raise DimensionMismatchError("reference/output wire assignments differ")
    if c0.inputs != c1.inputs:
        raise DimensionMismatchError("free input wires differ")


def _s_wires(c: MixedCircuit) -> list[int]:
    return sorted(w for p in c.partition.parties for w in p)


def _build(c0: MixedCircuit, c1: MixedCircuit) -> MixedCircuit:
    _check_pair(c0, c1)
    off = 2
    gates = [Gate("h", (0,), HADAMARD), Gate("cx", (1,), PAULI_X, (0,))]
    gates += _controlled_copy(c0, off, 1, on_zero=True)
    gates += _controlled_copy(c1, off, 1, on_zero=False)
    s = [w + off for w in _s_wires(c0)]
    r = [w + off for w in c0.partition.R]
    part = Partition(tuple(s), ((0,), (1,) + tuple(r)))
    inputs = tuple(w + off for w in c0.inputs)
    return MixedCircuit((2, 2) + c0.wire_dims, tuple(gates), part, inputs)


def qsd_to_qsep(c0: MixedCircuit, c1: MixedCircuit) -> MixedCircuit:
    """Bell pair on A, B; ``c0`` runs when B is 0 and ``c1`` when B is 1.

    Wires: A, B, then the input circuits' wires.  The output wires S are
    traced out; party A is the control qubit; party B holds B and R.
    """
    if c0.inputs or c1.inputs:
        raise ValidationError("state circuits must not declare free inputs")
    return _build(c0, c1)


def qcd_to_qsep_channel(q0: MixedCircuit, q1: MixedCircuit) -> MixedCircuit:
    """Channel version of :func:`qsd_to_qsep`; the shared input wires stay free."""
    if q0.input_dims != q1.input_dims:
        raise DimensionMismatchError("channel input shapes differ")
    return _build(q0, q1)


def _rs_vector(c: MixedCircuit) -> tuple[np.ndarray, int, int]:
    """Pure output of ``c`` ordered ``(R, S)`` with S the party wires."""
    out = run_circuit(c).pre_trace
    dims = list(c.wire_dims)
    r, s = list(c.partition.R), _s_wires(c)
    t = out.amplitudes.reshape(dims).transpose(r + s)
    d_r = math.prod(dims[w] for w in r)
    return t.reshape(-1), d_r, math.prod(dims[w] for w in s)


def separable_target(c0: MixedCircuit, c1: MixedCircuit) -> DensityMatrix:
    """``1/2 (|00><00| ⊗ psi_0^R + |11><11| ⊗ psi_1^R)`` on ``A : B R``."""
    _check_pair(c0, c1)
    v0, d_r, d_s = _rs_vector(c0)
    v1, _, _ = _rs_vector(c1)
    r0 = la.reduced_density(v0, [d_r, d_s], [0])
    r1 = la.reduced_density(v1, [d_r, d_s], [0])
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    m = 0.5 * (np.kron(np.kron(p0, p0), r0) + np.kron(np.kron(p1, p1), r1))
    return DensityMatrix.coerce(m, (2, 2 * d_r))


def separable_purification(c0: MixedCircuit, c1: MixedCircuit) -> np.ndarray:
    """Purification of the separable target with a Helstrom flag register.

    Returns ``(|0>_A |0>_B |psi_0>_{RS} |0>_F + |1>_A |1>_B |psi_1>_{RS} |1>_F)/sqrt 2``
    with the flag in the last factor.  Tracing S and the flag leaves the
    separable target.
    """
    _check_pair(c0, c1)
    v0, d_r, d_s = _rs_vector(c0)
    v1, _, _ = _rs_vector(c1)
    e = np.eye(2)
    out = np.kron(np.kron(e[0], e[0]), np.kron(v0, e[0])) + np.kron(np.kron(e[1], e[1]), np.kron(v1, e[1]))
    return out / math.sqrt(2)


def _is_projector(p: np.ndarray) -> bool:
    return la.is_hermitian(p, 1e-10) and np.allclose(p @ p, p, atol=1e-10)


def helstrom_isometry(pi0: np.ndarray, pi1: np.ndarray) -> np.ndarray:
    """``U = Pi0 ⊗ |0> + Pi1 ⊗ |1>``, mapping S to ``S ⊗ B'``."""
    pi0 = np.asarray(pi0, dtype=complex)
    pi1 = np.asarray(pi1, dtype=complex)
    if pi0.shape != pi1.shape or not _is_projector(pi0) or not _is_projector(pi1):
        raise ValidationError("Helstrom isometry needs two projectors")
    if not np.allclose(pi0 + pi1, np.eye(pi0.shape[0]), atol=1e-10):
        raise ValidationError("projectors must sum to the identity")
    e = np.eye(2)
    return np.kron(pi0, e[:, :1]) + np.kron(pi1, e[:, 1:])


def decoupling_unitary(c0: MixedCircuit, c1: MixedCircuit) -> np.ndarray:
    """``C^U = |0><0| ⊗ I + |1><1| ⊗ U_R`` on ``B ⊗ R``.

    ``U_R`` is the Uhlmann unitary carrying the purification of ``rho_1``
    onto that of ``rho_0``, phased so their overlap is real and nonnegative.
    """
    _check_pair(c0, c1)
    v0, d_r, d_s = _rs_vector(c0)
    v1, _, _ = _rs_vector(c1)
    u_r = uhlmann_unitary(PureState(v0, (d_r, d_s)), PureState(v1, (d_r, d_s)), 0)
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    return np.kron(p0, np.eye(d_r)) + np.kron(p1, u_r)


def decoupled_state(c0: MixedCircuit, c1: MixedCircuit) -> PureState:
    """Reduction state after Bob's controlled Uhlmann unitary, ordered ``(A, B, R, S)``."""
    red = qsd_to_qsep(c0, c1)
    _, d_r, d_s = _rs_vector(c0)
    out = run_circuit(red).pre_trace
    dims = list(red.wire_dims)
    r = [w + 2 for w in c0.partition.R]
    s = [w + 2 for w in _s_wires(c0)]
    vec = out.amplitudes.reshape(dims).transpose([0, 1] + r + s).reshape(-1)
    cu = decoupling_unitary(c0, c1)
    full = np.kron(np.kron(np.eye(2), cu), np.eye(d_s))
    return PureState(full @ vec, (2, 2, d_r, d_s))


def no_side_certificate(c0: MixedCircuit, c1: MixedCircuit) -> float:
    """CHSH one-way LOCC lower bound of the decoupled ``A B`` marginal."""
    st = decoupled_state(c0, c1)
    return chsh_1locc_gap(st.reduced([0, 1]))
