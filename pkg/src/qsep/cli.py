"""Command-line experiment driver.

Runs emit JSON lines (one record per line); bound sweeps emit CSV.  Every
float is written with 17 significant digits.  Exit codes: 0 success,
2 validation error, 3 dimension limit exceeded, 4 degenerate promise.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import circuit as ci
from . import extend as ex
from . import multiparty as mp
from . import protocol as pr
from . import reduction as rd
from .errors import DegeneratePromiseError, DimensionLimitError, ValidationError
from .qstate import DensityMatrix, trace_distance

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIMENSION = 3
EXIT_DEGENERATE = 4


# --------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"non-finite value {x!r} in output")
    s = "%.17g" % x
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj) -> str:
    """Compact JSON with every float at full double precision."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def transcript_digest(run: pr.ProtocolRun) -> str:
    h = hashlib.sha256()
    for cp in run.transcript:
        h.update(cp.label.encode())
        arr = getattr(cp.state, "matrix", getattr(cp.state, "amplitudes", cp.state))
        h.update(np.ascontiguousarray(np.asarray(arr, dtype=np.complex128)).tobytes())
    return h.hexdigest()


# --------------------------------------------------------------------------
# input files


def _read_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"{what}: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _complex_array(raw, where: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: expected nested [re, im] pairs") from None
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValidationError(f"{where}: expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_circuit(path: str) -> ci.MixedCircuit:
    try:
        return ci.load_circuit(path)
    except OSError as exc:
        raise ValidationError(f"circuit: cannot read {path}: {exc.strerror}") from None


def load_state(path: str) -> DensityMatrix:
    """``{"dims": [...], "matrix": [[[re, im], ...], ...]}`` or a ``"vector"``."""
    obj = _read_json(path, "state")
    if not isinstance(obj, dict) or "dims" not in obj:
        raise ValidationError("state: missing field 'dims'")
    dims = obj["dims"]
    if "matrix" in obj:
        m = _complex_array(obj["matrix"], "state.matrix")
        return DensityMatrix(m, dims)
    if "vector" in obj:
        v = _complex_array(obj["vector"], "state.vector")
        return DensityMatrix.from_vector(v / np.linalg.norm(v), dims)
    raise ValidationError("state: expected field 'matrix' or 'vector'")


def load_decomposition(path: str) -> ex.SeparableDecomposition:
    """``{"weights": [...], "factors": [[a, b], ...]}`` with complex pair vectors."""
    obj = _read_json(path, "decomposition")
    if not isinstance(obj, dict) or "weights" not in obj or "factors" not in obj:
        raise ValidationError("decomposition: expected fields 'weights' and 'factors'")
    factors = []
    for i, term in enumerate(obj["factors"]):
        if not isinstance(term, list) or len(term) != 2:
            raise ValidationError(f"decomposition.factors[{i}]: expected a pair of vectors")
        a = _complex_array(term[0], f"decomposition.factors[{i}][0]")
        b = _complex_array(term[1], f"decomposition.factors[{i}][1]")
        factors.append((a / np.linalg.norm(a), b / np.linalg.norm(b)))
    return ex.SeparableDecomposition(np.asarray(obj["weights"], dtype=float), tuple(factors))


def _state_from_args(args) -> DensityMatrix:
    if getattr(args, "state", None):
        return load_state(args.state)
    if args.circuit:
        return ci.run_circuit(load_circuit(args.circuit[0])).post_trace
    raise ValidationError("need --state or --circuit")


# --------------------------------------------------------------------------
# commands


def _decomposition_for(rho: DensityMatrix, args) -> ex.SeparableDecomposition:
    if args.decomposition:
        return load_decomposition(args.decomposition)
    fit = ex.gilbert_separable_fit(rho, None, budget=args.budget, seed=args.seed)
    return fit.decomposition()


def cmd_simulate(args) -> list[dict]:
    if not args.circuit:
        raise ValidationError("simulate: --circuit is required")
    c = load_circuit(args.circuit[0])
    k = args.k
    record: dict = {"command": "simulate", "k": k, "prover": args.prover, "seed": args.seed}
    channel = bool(c.inputs)
    if channel:
        rho = ci.run_channel_circuit(c, np.eye(int(np.prod(c.input_dims)))[0])
    else:
        rho = ci.run_circuit(c).post_trace
    if args.prover == "identity":
        p = pr.channel_input_strategy(c, k) if channel else pr.identity_prover_strategy(c, k)
    elif args.prover == "honest":
        d = _decomposition_for(rho, args)
        delta_c = trace_distance(rho, d.state())
        record["delta_c"] = delta_c
        record["completeness_bound"] = pr.completeness_bound(min(delta_c, 1.0))
        p = pr.honest_channel_strategy(c, d, k) if channel else pr.honest_prover_strategy(c, d, k)
    else:
        if channel:
            raise ValidationError("simulate: the optimal prover is available for state circuits only")
        p = pr.optimal_prover_strategy(c, k, restarts=args.restarts, seed=args.seed)
    run = pr.run_qip3_channel_protocol(c, p, k) if channel else pr.run_qip2_protocol(c, p, k)
    record["protocol"] = "qip3-channel" if channel else "qip2-state"
    record["acceptance_probability"] = run.acceptance_probability
    upper, lower = ex.distance_to_separable(rho, None, budget=args.budget, seed=args.seed)
    record["bounds"] = {
        "separable_distance_upper": upper,
        "separable_distance_lower": lower,
        "soundness_bound_from_lower": pr.soundness_bound(min(lower, 2.0)),
    }
    record["transcript_digest"] = transcript_digest(run)
    return [record]


def _qsd_metadata(c0: ci.MixedCircuit, c1: ci.MixedCircuit, red: ci.MixedCircuit, args) -> dict:
    r0 = ci.run_circuit(c0).post_trace
    r1 = ci.run_circuit(c1).post_trace
    dist = trace_distance(r0.matrix, r1.matrix)
    eps_yes = max(0.0, 2.0 - dist)
    eps_no = dist
    omega = ci.run_circuit(red).post_trace
    target = rd.separable_target(c0, c1)
    gilbert_upper, ppt_lower = ex.distance_to_separable(omega, None, budget=args.budget, seed=args.seed)
    return {
        "input_trace_distance": dist,
        "eps_yes": eps_yes,
        "eps_no": eps_no,
        "yes_distance_bound": 2 * math.sqrt(eps_yes),
        "no_locc_bound": 0.2 - 2 * math.sqrt(eps_no),
        "separable_upper": min(gilbert_upper, trace_distance(omega, target)),
        "separable_lower": ppt_lower,
        "locc_lower": rd.no_side_certificate(c0, c1),
        "ppt": ex.ppt_check(omega),
    }


def cmd_reduce(args) -> list[dict]:
    kind = args.kind
    if kind == "wmem-to-qsep":
        if not args.state:
            raise ValidationError("reduce wmem-to-qsep: --state is required")
        rho = load_state(args.state)
        inst = ci.wmem_to_qsep(rho, args.eps)
        meta = {"delta_c": inst.delta_c, "delta_s": inst.delta_s, "eps_diag": inst.eps_diag, "eps_synth": inst.eps_synth}
        return [{"command": "reduce", "kind": kind, "circuit": ci.circuit_to_dict(inst.circuit), "metadata": meta}]
    if not args.circuit or len(args.circuit) != 2:
        raise ValidationError(f"reduce {kind}: pass --circuit exactly twice")
    c0, c1 = (load_circuit(p) for p in args.circuit)
    if kind == "qsd-to-qsep":
        red = rd.qsd_to_qsep(c0, c1)
        meta = _qsd_metadata(c0, c1, red, args)
    else:
        red = rd.qcd_to_qsep_channel(c0, c1)
        meta = {"inputs": list(red.inputs)}
    return [{"command": "reduce", "kind": kind, "circuit": ci.circuit_to_dict(red), "metadata": meta}]


def _floats(text: str | None, default: Sequence[float]) -> list[float]:
    if text is None:
        return list(default)
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse number list {text!r}") from None


def _ints(text: str | None, default: Sequence[int]) -> list[int]:
    return [int(x) for x in _floats(text, default)]


BOUND_HEADERS = {
    "lemma1": ["eps", "delta", "dim_a", "value"],
    "lemma2": ["eps", "delta", "dim_c", "l", "value"],
    "prop1": ["k", "delta", "dim_a", "value"],
    "prop2": ["k", "delta", "dim_c", "l", "value"],
    "completeness": ["delta_c", "value"],
    "soundness": ["delta_s", "value"],
}


def bound_rows(args) -> tuple[list[str], list[list]]:
    kind = args.bound
    eps = _floats(args.eps_list, [0.2])
    delta = _floats(args.delta_list, [0.1])
    dims = _ints(args.dim_list, [2])
    ls = _ints(args.l_list, [2])
    ks = _ints(args.k_list, [11])
    rows: list[list] = []
    if kind == "lemma1":
        rows = [[e, d, a, ex.lemma1_k(e, d, a)] for e in eps for d in delta for a in dims]
    elif kind == "lemma2":
        rows = [[e, d, a, l, mp.lemma2_k(e, d, a, l)] for e in eps for d in delta for a in dims for l in ls]
    elif kind == "prop1":
        rows = [[k, d, a, ex.prop1_bound(k, d, a)] for k in ks for d in delta for a in dims]
    elif kind == "prop2":
        rows = [[k, d, a, l, mp.prop2_bound(k, d, a, l)] for k in ks for d in delta for a in dims for l in ls]
    elif kind == "completeness":
        rows = [[d, pr.completeness_bound(d)] for d in _floats(args.delta_list, [0.0, 0.01, 1.0])]
    elif kind == "soundness":
        rows = [[d, pr.soundness_bound(d)] for d in _floats(args.delta_list, [0.0, 0.2, 2.0])]
    return BOUND_HEADERS[kind], rows


def cmd_bounds(args) -> tuple[list[str], list[list]]:
    return bound_rows(args)


def cmd_distance(args) -> list[dict]:
    rho = _state_from_args(args)
    upper, lower = ex.distance_to_separable(rho, None, budget=args.budget, seed=args.seed)
    return [{"command": "distance", "upper": upper, "lower": lower, "ppt": ex.ppt_check(rho), "budget": args.budget, "seed": args.seed}]


def cmd_chsh(args) -> list[dict]:
    rho = _state_from_args(args)
    return [{"command": "chsh", "p_win": rd.chsh_value(rho), "gap": rd.chsh_1locc_gap(rho)}]


def cmd_extend_test(args) -> list[dict]:
    rho = _state_from_args(args)
    val, wit = ex.max_k_extendible_fidelity(rho, args.k, restarts=args.restarts, seed=args.seed)
    return [
        {
            "command": "extend-test",
            "k": args.k,
            "max_k_extendible_fidelity": val,
            "witness_is_k_extension": ex.is_k_extension(wit, wit.marginal, 1e-8),
            "ppt": ex.ppt_check(rho),
            "seed": args.seed,
        }
    ]


# --------------------------------------------------------------------------
# argument parsing


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsep", description="Separability-testing protocol simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stochastic=True):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default=None)
        if stochastic:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--budget", type=_positive, default=2000, help="Gilbert iteration budget")

    p = sub.add_parser("simulate", help="run the permutation-test protocol")
    p.add_argument("--circuit", action="append")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--prover", choices=["identity", "honest", "optimal"], default="identity")
    p.add_argument("--decomposition", help="separable decomposition JSON for the honest prover")
    p.add_argument("--restarts", type=_positive, default=10)
    common(p)

    p = sub.add_parser("reduce", help="build a reduction circuit")
    p.add_argument("kind", choices=["qsd-to-qsep", "qcd-to-qsep-channel", "wmem-to-qsep"])
    p.add_argument("--circuit", action="append")
    p.add_argument("--state")
    p.add_argument("--eps", type=float, default=1.0)
    common(p)

    p = sub.add_parser("bounds", help="tabulate bound formulas")
    p.add_argument("bound", choices=sorted(BOUND_HEADERS))
    p.add_argument("--eps-list")
    p.add_argument("--delta-list")
    p.add_argument("--dim-list")
    p.add_argument("--l-list")
    p.add_argument("--k-list")
    common(p, stochastic=False)

    for name, help_ in (("distance", "bracket the distance to the separable set"), ("chsh", "CHSH value and one-way LOCC gap")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--circuit", action="append")
        p.add_argument("--state")
        common(p)

    p = sub.add_parser("extend-test", help="maximum k-extendible fidelity")
    p.add_argument("--circuit", action="append")
    p.add_argument("--state")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--restarts", type=_positive, default=10)
    common(p)
    return parser


def _render(args, result) -> str:
    fmt = args.format or ("csv" if args.command == "bounds" else "json")
    if args.command == "bounds":
        header, rows = result
        if fmt == "json":
            return "".join(dumps(dict(zip(header, r))) + "\n" for r in rows)
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for r in rows:
            buf.write(",".join(_fmt_float(x) if isinstance(x, float) else str(x) for x in r) + "\n")
        return buf.getvalue()
    if fmt == "csv":
        flat = [{k: v for k, v in rec.items() if not isinstance(v, (dict, list))} for rec in result]
        header = list(flat[0])
        lines = [",".join(header)]
        for rec in flat:
            lines.append(",".join(_fmt_float(v) if isinstance(v, float) else str(v) for v in rec.values()))
        return "\n".join(lines) + "\n"
    return "".join(dumps(rec) + "\n" for rec in result)


COMMANDS = {
    "simulate": cmd_simulate,
    "reduce": cmd_reduce,
    "bounds": cmd_bounds,
    "distance": cmd_distance,
    "chsh": cmd_chsh,
    "extend-test": cmd_extend_test,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _render(args, COMMANDS[args.command](args))
    except DegeneratePromiseError as exc:
        print(f"qsep: degenerate promise: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DimensionLimitError as exc:
        print(f"qsep: dimension limit: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (ValidationError, ValueError) as exc:
        print(f"qsep: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
