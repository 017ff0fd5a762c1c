"""Mixed-state circuits: construction, exact simulation, synthesis, JSON I/O.

A circuit acts on labeled wires starting in ``|0...0>``.  Wires labeled R
are traced out at the end; the remaining wires are grouped into parties
(A, B or A1..Al).  Channel-circuits additionally declare free input wires
that receive an externally supplied state instead of ``|0>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import linalg as la
from .errors import DegeneratePromiseError, DimensionMismatchError, ValidationError
from .qstate import DensityMatrix, PureState, StinespringChannel, trace_distance

__all__ = [
    "Gate",
    "Partition",
    "MixedCircuit",
    "CircuitOutput",
    "WmemInstance",
    "party_labels",
    "apply_gate",
    "evolve",
    "run_circuit",
    "run_channel_circuit",
    "circuit_unitary",
    "circuit_channel",
    "synthesize_state_prep",
    "wmem_to_qsep",
    "state_circuit",
    "circuit_to_dict",
    "circuit_from_dict",
    "load_circuit",
    "dump_circuit",
    "dumps_circuit",
    "loads_circuit",
]

UNITARY_TOL = 1e-10
PARSE_TOL = 1e-8


@dataclass(frozen=True)
class Gate:
    """A unitary on ``targets`` applied when every control wire holds ``|1>``."""

    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray
    controls: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if not self.targets:
            raise ValidationError(f"gate {self.name!r} has no targets")
        if set(self.targets) & set(self.controls):
            raise ValidationError(f"gate {self.name!r}: targets and controls overlap")
        if len(set(self.targets)) != len(self.targets) or len(set(self.controls)) != len(self.controls):
            raise ValidationError(f"gate {self.name!r}: repeated wire")
        if not la.is_unitary(m, UNITARY_TOL):
            raise ValidationError(f"gate {self.name!r}: payload is not unitary")


@dataclass(frozen=True)
class Partition:
    """Wire labels: the traced reference ``R`` and an ordered party list."""

    R: tuple[int, ...]
    parties: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "R", tuple(int(w) for w in self.R))
        object.__setattr__(self, "parties", tuple(tuple(int(w) for w in p) for p in self.parties))

    @property
    def labels(self) -> list[str]:
        return party_labels(len(self.parties))

    def wires(self) -> list[int]:
        return list(self.R) + [w for p in self.parties for w in p]


def party_labels(n: int) -> list[str]:
    if n == 1:
        return ["A"]
    if n == 2:
        return ["A", "B"]
    return [f"A{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class MixedCircuit:
    wire_dims: tuple[int, ...]
    gates: tuple[Gate, ...]
    partition: Partition
    inputs: tuple[int, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.wire_dims)
        object.__setattr__(self, "wire_dims", dims)
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "inputs", tuple(int(w) for w in self.inputs))
        part = self.partition
        if not isinstance(part, Partition):
            part = Partition(part["R"], part["parties"])
            object.__setattr__(self, "partition", part)
        n = len(dims)
        if any(d < 1 for d in dims):
            raise ValidationError("wire dimensions must be positive")
        labeled = part.wires()
        if sorted(labeled) != list(range(n)):
            missing = sorted(set(range(n)) - set(labeled))
            if missing:
                raise ValidationError(f"partition: wires {missing} are unlabeled")
            raise ValidationError("partition: a wire is labeled more than once or out of range")
        if not part.parties or not any(part.parties):
            raise ValidationError("partition: at least one non-R wire is required")
        if any(not p for p in part.parties):
            raise ValidationError("partition: empty party")
        if len(set(self.inputs)) != len(self.inputs) or any(w < 0 or w >= n for w in self.inputs):
            raise ValidationError("inputs: invalid wire index")
        for g in self.gates:
            for w in g.targets + g.controls:
                if w < 0 or w >= n:
                    raise ValidationError(f"gate {g.name!r}: wire {w} out of range")
            dt = math.prod(dims[t] for t in g.targets)
            if g.matrix.shape != (dt, dt):
                raise ValidationError(f"gate {g.name!r}: payload shape {g.matrix.shape} does not fit targets")
            for c in g.controls:
                if dims[c] < 2:
                    raise ValidationError(f"gate {g.name!r}: control wire {c} has dimension 1")

    @property
    def n_wires(self) -> int:
        return len(self.wire_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.wire_dims)

    @property
    def party_dims(self) -> tuple[int, ...]:
        return tuple(math.prod(self.wire_dims[w] for w in p) for p in self.partition.parties)

    @property
    def reference_dim(self) -> int:
        return math.prod(self.wire_dims[w] for w in self.partition.R)

    @property
    def input_dims(self) -> tuple[int, ...]:
        return tuple(self.wire_dims[w] for w in self.inputs)

    def with_partition(self, partition: Partition) -> "MixedCircuit":
        return replace(self, partition=partition)

    def then(self, gates: Iterable[Gate]) -> "MixedCircuit":
        return replace(self, gates=self.gates + tuple(gates))


class CircuitOutput(NamedTuple):
    pre_trace: PureState
    post_trace: DensityMatrix


# --------------------------------------------------------------------------
# simulation


def apply_gate(tensor: np.ndarray, gate: Gate) -> np.ndarray:
    """Apply a gate to a state tensor whose leading axes are the wires.

    Trailing axes (beyond the wires) are left untouched, which lets callers
    carry an external reference along.
    """
    out = np.array(tensor, dtype=complex, copy=True)
    nc, nt = len(gate.controls), len(gate.targets)
    lead = list(gate.controls) + list(gate.targets)
    view = np.moveaxis(out, lead, list(range(nc + nt)))
    sel = (1,) * nc
    block = view[sel]
    shape = block.shape
    dt = gate.matrix.shape[0]
    view[sel] = (gate.matrix @ block.reshape(dt, -1)).reshape(shape)
    return out


def evolve(c: MixedCircuit, tensor: np.ndarray) -> np.ndarray:
    """Run every gate on a tensor shaped ``wire_dims + extra``."""
    for g in c.gates:
        tensor = apply_gate(tensor, g)
    return tensor


def _zero_tensor(dims: Sequence[int], extra: int = 1) -> np.ndarray:
    t = np.zeros(tuple(dims) + (extra,), dtype=complex)
    t[(0,) * len(dims) + (0,)] = 1.0
    return t


def _party_order(c: MixedCircuit) -> list[int]:
    return list(c.partition.R) + [w for p in c.partition.parties for w in p]


def _trace_to_parties(c: MixedCircuit, psi: np.ndarray) -> DensityMatrix:
    """Reduced state on the parties, each party's wires merged, party order."""
    flat = psi.reshape(c.total_dim, -1)
    # columns of flat index the external reference (traced as well)
    kept = [w for p in c.partition.parties for w in p]
    dims = list(c.wire_dims)
    t = flat.reshape(dims + [flat.shape[1]])
    order = kept + list(c.partition.R) + [len(dims)]
    dk = math.prod(dims[w] for w in kept)
    m = t.transpose(order).reshape(dk, -1)
    return DensityMatrix.coerce(m @ la.dagger(m), c.party_dims)


def run_circuit(c: MixedCircuit) -> CircuitOutput:
    """Exact simulation from ``|0...0>``; free input wires also start at ``|0>``."""
    la.check_dim(c.total_dim, "circuit dimension")
    psi = evolve(c, _zero_tensor(c.wire_dims))[..., 0].reshape(-1)
    pre = PureState(psi / np.linalg.norm(psi), c.wire_dims)
    return CircuitOutput(pre, _trace_to_parties(c, psi))


def _inject_inputs(c: MixedCircuit, vec: np.ndarray) -> np.ndarray:
    """Tensor with free input wires carrying ``vec`` (input wires x extra)."""
    dims = list(c.wire_dims)
    din = math.prod(c.input_dims) if c.inputs else 1
    vec = np.asarray(vec, dtype=complex).reshape(din, -1)
    extra = vec.shape[1]
    la.check_dim(c.total_dim * extra, "circuit dimension with input reference")
    rest = [w for w in range(len(dims)) if w not in c.inputs]
    rest_zero = np.zeros(math.prod(dims[w] for w in rest) if rest else 1, dtype=complex)
    rest_zero[0] = 1.0
    joint = np.einsum("ie,j->ije", vec, rest_zero)
    t = joint.reshape([dims[w] for w in c.inputs] + [dims[w] for w in rest] + [extra])
    order = list(c.inputs) + rest
    inv = [0] * len(order)
    for pos, w in enumerate(order):
        inv[w] = pos
    return t.transpose(inv + [len(dims)])


def run_channel_circuit(c: MixedCircuit, input_state) -> DensityMatrix:
    """Apply the channel a circuit implements to a state on its input wires.

    ``input_state`` is a vector (pure input), a density matrix, or a
    :class:`PureState` whose first factor is an external reference and whose
    remaining factors are the input wires; in the last case the reference is
    kept as the final output factor.
    """
    if isinstance(input_state, PureState):
        ref = input_state.dims[0]
        vec = input_state.amplitudes.reshape(ref, -1).T
        out = evolve(c, _inject_inputs(c, vec))
        kept = [w for p in c.partition.parties for w in p]
        dims = list(c.wire_dims)
        order = kept + [len(dims)] + list(c.partition.R)
        t = out.transpose(order)
        dk = math.prod(dims[w] for w in kept) * ref
        m = t.reshape(dk, -1)
        return DensityMatrix.coerce(m @ la.dagger(m), c.party_dims + (ref,))
    x = np.asarray(getattr(input_state, "matrix", input_state), dtype=complex)
    if x.ndim == 1:
        vec = x
    else:
        w, v = la.eigh(x)
        vec = v * np.sqrt(np.clip(w, 0.0, None))
    din = math.prod(c.input_dims) if c.inputs else 1
    if np.asarray(vec).reshape(din, -1).shape[0] != din or np.asarray(vec).size % din:
        raise DimensionMismatchError("input state does not match the circuit's input wires")
    return _trace_to_parties(c, evolve(c, _inject_inputs(c, vec)))


def circuit_unitary(c: MixedCircuit) -> np.ndarray:
    """Full unitary of the gate sequence in the wire-order basis."""
    d = la.check_dim(c.total_dim, "circuit dimension")
    eye = np.eye(d, dtype=complex).reshape(list(c.wire_dims) + [d])
    return evolve(c, eye).reshape(d, d)


def circuit_channel(c: MixedCircuit) -> StinespringChannel:
    """Stinespring form: inputs first, then the remaining wires as ancillas.

    The output is ordered ``R`` (traced) followed by each party, with every
    party's wires merged into one factor.
    """
    dims = list(c.wire_dims)
    rest = [w for w in range(len(dims)) if w not in c.inputs]
    in_order = list(c.inputs) + rest
    u = circuit_unitary(c)
    d = u.shape[0]
    # basis change: (inputs, ancillas) -> wire order
    p_in = np.eye(d).reshape(dims + [d])
    p_in = p_in.transpose(in_order + [len(dims)]).reshape(d, d).T
    out_order = _party_order(c)
    q_out = np.eye(d).reshape(dims + [d]).transpose(out_order + [len(dims)]).reshape(d, d)
    full = q_out @ u @ p_in
    r = list(c.partition.R)
    out_dims = [dims[w] for w in r] + list(c.party_dims)
    anc = [dims[w] for w in rest]
    ind = [dims[w] for w in c.inputs] or [1]
    return StinespringChannel(full, tuple(ind), tuple(anc), tuple(out_dims), tuple(range(len(r))))


# --------------------------------------------------------------------------
# state-preparation synthesis


def _householder_prep(col: np.ndarray) -> np.ndarray | None:
    """Unitary with first column ``col``; ``None`` when that is the identity."""
    col = np.asarray(col, dtype=complex)
    d = col.shape[0]
    e0 = np.zeros(d, dtype=complex)
    e0[0] = 1.0
    if np.linalg.norm(col - e0) < 1e-15:
        return None
    phase = col[0] / abs(col[0]) if abs(col[0]) > 1e-300 else 1.0
    w = e0 - col / phase
    nw = np.vdot(w, w).real
    if nw < 1e-30:
        return phase * np.eye(d, dtype=complex)
    return phase * (np.eye(d, dtype=complex) - 2 * np.outer(w, w.conj()) / nw)


def _shift(d: int, s: int) -> np.ndarray:
    """Cyclic shift ``|v> -> |v + s mod d>``."""
    return np.roll(np.eye(d, dtype=complex), s % d, axis=0)


def _wire_split(dims: Sequence[int]) -> tuple[list[int], list[list[int]]]:
    """Per-subsystem wires: qubits for power-of-2 dims, one qudit otherwise."""
    wire_dims, groups = [], []
    for d in dims:
        if d >= 2 and d & (d - 1) == 0:
            n = d.bit_length() - 1
            groups.append(list(range(len(wire_dims), len(wire_dims) + n)))
            wire_dims.extend([2] * n)
        else:
            groups.append([len(wire_dims)])
            wire_dims.append(d)
    return wire_dims, groups


def _prep_gates(psi: np.ndarray, wire_dims: Sequence[int], tol: float = 1e-14) -> list[Gate]:
    """Top-down preparation: one multi-controlled unitary per prefix pattern."""
    n = len(wire_dims)
    t = psi.reshape(wire_dims)
    gates: list[Gate] = []
    for j in range(n):
        dj = wire_dims[j]
        prefix_dims = list(wire_dims[:j])
        for pattern in np.ndindex(*prefix_dims) if prefix_dims else [()]:
            branch = t[pattern]
            bnorm = np.linalg.norm(branch)
            if bnorm <= tol:
                continue
            if j < n - 1:
                col = np.array([np.linalg.norm(branch[v]) for v in range(dj)]) / bnorm
            else:
                col = branch / bnorm
            u = _householder_prep(col)
            if u is None:
                continue
            controls = [i for i in range(j) if wire_dims[i] > 1]
            flips = []
            for i in controls:
                s = (1 - pattern[i]) % wire_dims[i]
                if s:
                    flips.append((i, s))
            for i, s in flips:
                gates.append(Gate("shift", (i,), _shift(wire_dims[i], s)))
            gates.append(Gate("prep", (j,), u, tuple(controls)))
            for i, s in reversed(flips):
                gates.append(Gate("shift", (i,), _shift(wire_dims[i], -s)))
    return gates


def synthesize_state_prep(target: PureState, partition: Sequence[Sequence[int]] | None = None, reference: Sequence[int] = ()) -> MixedCircuit:
    """Circuit whose pre-trace state reproduces ``target``.

    Each subsystem of dimension ``2**n`` becomes ``n`` qubit wires; any other
    dimension becomes one qudit wire of that size.  ``partition`` groups
    subsystem indices into parties (default: one party per subsystem not in
    ``reference``); subsystems listed in ``reference`` are labeled R.
    """
    if not isinstance(target, PureState):
        raise ValidationError("synthesize_state_prep expects a PureState")
    la.check_dim(target.dim, "synthesis target dimension")
    wire_dims, groups = _wire_split(target.dims)
    reference = list(reference)
    if partition is None:
        partition = [[i] for i in range(len(target.dims)) if i not in reference]
    r_wires = [w for i in reference for w in groups[i]]
    parties = [[w for i in part for w in groups[i]] for part in partition]
    gates = _prep_gates(target.amplitudes, wire_dims)
    return MixedCircuit(tuple(wire_dims), tuple(gates), Partition(r_wires, parties))


def _purified_circuit(rho: DensityMatrix) -> tuple[MixedCircuit, np.ndarray, float]:
    """Diagonalize, purify with a reference register, and synthesize."""
    w, v = la.eigh(rho.matrix)
    # numerically null directions are dropped; the residual accounts for them
    w = np.where(w > 1e-13, w, 0.0)
    recon = (v * w) @ la.dagger(v)
    eps_diag = la.trace_norm(recon - rho.matrix)
    w = w / w.sum()
    keep = np.nonzero(w > 0)[0][::-1]
    d_r = max(1, len(keep))
    psi = np.zeros(d_r * rho.dim, dtype=complex)
    for pos, i in enumerate(keep):
        psi += np.sqrt(w[i]) * np.kron(np.eye(d_r)[pos], v[:, i])
    psi /= np.linalg.norm(psi)
    n = len(rho.dims)
    target = PureState(psi, (d_r,) + tuple(rho.dims))
    circ = synthesize_state_prep(target, partition=[[i + 1] for i in range(n)], reference=[0])
    return circ, (v * w) @ la.dagger(v), eps_diag


def state_circuit(rho: DensityMatrix) -> MixedCircuit:
    """Circuit whose parties hold ``rho``'s subsystems, purified by R.

    The reference register has the size of ``rho``'s rank.
    """
    return _purified_circuit(rho)[0]


class WmemInstance(NamedTuple):
    circuit: MixedCircuit
    delta_c: float
    delta_s: float
    eps_diag: float
    eps_synth: float


def wmem_to_qsep(rho: DensityMatrix, eps: float) -> WmemInstance:
    """Encode a bipartite density matrix as a QSEP-STATE circuit.

    The state is diagonalized, purified with a reference, and synthesized.
    ``eps_diag`` is the trace-norm reconstruction residual of the
    eigendecomposition and ``eps_synth`` the trace distance between the
    circuit output and the reconstructed state.  The promise gaps follow the
    weak-membership conversion ``delta_s = eps/sqrt(153) - eps_diag - eps_synth``.
    """
    if not 0 < eps <= 2:
        raise ValidationError(f"eps must lie in (0, 2], got {eps}")
    if len(rho.dims) != 2:
        raise ValidationError("wmem_to_qsep needs a bipartite state")
    circ, recon, eps_diag = _purified_circuit(rho)
    out = run_circuit(circ).post_trace
    eps_synth = trace_distance(out.matrix, recon)
    delta_c = eps_diag + eps_synth
    delta_s = eps / math.sqrt(153) - eps_diag - eps_synth
    if delta_s <= delta_c:
        raise DegeneratePromiseError(f"delta_s={delta_s:.6g} does not exceed delta_c={delta_c:.6g}")
    return WmemInstance(circ, delta_c, delta_s, eps_diag, eps_synth)


# --------------------------------------------------------------------------
# JSON


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def circuit_to_dict(c: MixedCircuit) -> dict:
    out = {
        "wire_dims": list(c.wire_dims),
        "partition": {"R": list(c.partition.R), "parties": [list(p) for p in c.partition.parties]},
        "gates": [
            {"name": g.name, "targets": list(g.targets), "controls": list(g.controls), "matrix": _encode_matrix(g.matrix)}
            for g in c.gates
        ],
    }
    if c.inputs:
        out["inputs"] = list(c.inputs)
    return out


def _int_list(x, where: str) -> list[int]:
    if not isinstance(x, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in x):
        raise ValidationError(f"{where}: expected a list of integers")
    return list(x)


def _decode_matrix(raw, where: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{where}: expected a nonempty list of rows")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ValidationError(f"{where}[{i}]: expected a row list")
        vals = []
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in z)
            ):
                raise ValidationError(f"{where}[{i}][{j}]: expected [re, im]")
            vals.append(complex(z[0], z[1]))
        rows.append(vals)
    if any(len(r) != len(rows) for r in rows):
        raise ValidationError(f"{where}: matrix must be square")
    return np.array(rows, dtype=complex)


def _nearest_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def circuit_from_dict(obj) -> MixedCircuit:
    """Parse the circuit JSON object, naming the offending field on error."""
    if not isinstance(obj, dict):
        raise ValidationError("circuit: top level must be an object")
    for key in ("wire_dims", "partition", "gates"):
        if key not in obj:
            raise ValidationError(f"circuit: missing field {key!r}")
    wire_dims = _int_list(obj["wire_dims"], "wire_dims")
    part = obj["partition"]
    if not isinstance(part, dict) or "R" not in part or "parties" not in part:
        raise ValidationError("partition: expected an object with 'R' and 'parties'")
    r = _int_list(part["R"], "partition.R")
    if not isinstance(part["parties"], list):
        raise ValidationError("partition.parties: expected a list")
    parties = [_int_list(p, f"partition.parties[{i}]") for i, p in enumerate(part["parties"])]
    if not isinstance(obj["gates"], list):
        raise ValidationError("gates: expected a list")
    gates = []
    for i, g in enumerate(obj["gates"]):
        where = f"gates[{i}]"
        if not isinstance(g, dict):
            raise ValidationError(f"{where}: expected an object")
        for key in ("name", "targets", "matrix"):
            if key not in g:
                raise ValidationError(f"{where}: missing field {key!r}")
        if not isinstance(g["name"], str):
            raise ValidationError(f"{where}.name: expected a string")
        targets = _int_list(g["targets"], f"{where}.targets")
        controls = _int_list(g.get("controls", []), f"{where}.controls")
        m = _decode_matrix(g["matrix"], f"{where}.matrix")
        if not np.all(np.isfinite(m)):
            raise ValidationError(f"{where}.matrix: non-finite entry")
        resid = np.linalg.norm(la.dagger(m) @ m - np.eye(m.shape[0]), 2)
        if resid > PARSE_TOL:
            raise ValidationError(f"{where}.matrix: payload is not unitary (residual {resid:.3e})")
        if resid > UNITARY_TOL:
            m = _nearest_unitary(m)
        try:
            gates.append(Gate(g["name"], targets, m, controls))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
    inputs = _int_list(obj.get("inputs", []), "inputs")
    return MixedCircuit(tuple(wire_dims), tuple(gates), Partition(r, parties), tuple(inputs))


def dumps_circuit(c: MixedCircuit) -> str:
    return json.dumps(circuit_to_dict(c))


def loads_circuit(text: str) -> MixedCircuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"circuit: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return circuit_from_dict(obj)


def load_circuit(path) -> MixedCircuit:
    with open(path, encoding="utf-8") as fh:
        return loads_circuit(fh.read())


def dump_circuit(c: MixedCircuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_circuit(c))
        fh.write("\n")
