import csv
import io
import json
import math

import numpy as np
import pytest

from qsep import circuit as ci
from qsep import cli
from qsep import qstate as qs

from conftest import PHI_PLUS, pure_circuit


@pytest.fixture
def files(tmp_path):
    def write(name, c):
        path = tmp_path / name
        ci.dump_circuit(c, path)
        return str(path)

    def write_state(name, m, dims):
        path = tmp_path / name
        path.write_text(json.dumps({"dims": list(dims), "matrix": [[[z.real, z.imag] for z in row] for row in m]}))
        return str(path)

    theta = math.asin(1e-4 / 2)
    out = {
        "bell": write("bell.json", pure_circuit(PHI_PLUS)),
        "sep": write("sep.json", pure_circuit([1, 0, 0, 0])),
        "zero": write("zero.json", pure_circuit([1, 0], (2,))),
        "one": write("one.json", pure_circuit([0, 1], (2,))),
        "near": write("near.json", pure_circuit([math.cos(theta), math.sin(theta)], (2,))),
        "mixed": write("mixed.json", ci.state_circuit(qs.DensityMatrix(np.eye(2) / 2, (2,)))),
        "mixed2": write("mixed2.json", ci.state_circuit(qs.DensityMatrix(qs.random_density_matrix(4, np.random.default_rng(2)), (2, 2)))),
        "rho": write_state("rho.json", qs.random_density_matrix(4, np.random.default_rng(3)), (2, 2)),
        "dir": tmp_path,
    }
    return out


def run(capsys, *argv):
    code = cli.main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def record(out):
    lines = out.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


class TestSimulate:
    def test_bell_identity(self, capsys, files):
        code, out, _ = run(capsys, "simulate", "--circuit", files["bell"], "--k", "2")
        rec = record(out)
        assert code == 0 and rec["acceptance_probability"] == pytest.approx(0.75, abs=1e-12)
        assert rec["k"] == 2 and len(rec["transcript_digest"]) == 64

    def test_separable_honest(self, capsys, files):
        code, out, _ = run(capsys, "simulate", "--circuit", files["sep"], "--k", "2", "--prover", "honest")
        assert code == 0 and record(out)["acceptance_probability"] == pytest.approx(1.0, abs=1e-9)

    def test_decomposition_file(self, capsys, files, tmp_path):
        dec = tmp_path / "dec.json"
        dec.write_text(json.dumps({"weights": [1.0], "factors": [[[[1, 0], [0, 0]], [[1, 0], [0, 0]]]]}))
        code, out, _ = run(capsys, "simulate", "--circuit", files["sep"], "--k", "3", "--prover", "honest", "--decomposition", str(dec))
        assert code == 0 and record(out)["acceptance_probability"] == pytest.approx(1.0, abs=1e-9)

    def test_optimal(self, capsys, files):
        code, out, _ = run(capsys, "simulate", "--circuit", files["bell"], "--k", "3", "--prover", "optimal")
        assert code == 0 and record(out)["acceptance_probability"] == pytest.approx(2 / 3, abs=1e-6)

    def test_malformed_field(self, capsys, files, tmp_path):
        obj = json.loads(open(files["bell"]).read())
        obj["gates"][0]["matrix"][0][0] = [5, 0]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(obj))
        code, _, err = run(capsys, "simulate", "--circuit", str(bad))
        assert code == 2 and "gates[0].matrix" in err

    def test_truncated_json(self, capsys, tmp_path):
        bad = tmp_path / "trunc.json"
        bad.write_text('{"wire_dims": [2,\n')
        code, _, err = run(capsys, "simulate", "--circuit", str(bad))
        assert code == 2 and "line 2" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--circuit", str(tmp_path / "nope.json"))
        assert code == 2

    def test_dimension_limit(self, capsys, files, monkeypatch):
        monkeypatch.setenv("QSEP_DIM_LIMIT", "8")
        code, _, err = run(capsys, "simulate", "--circuit", files["bell"], "--k", "3")
        assert code == 3 and "limit" in err

    def test_byte_identical(self, capsys, files, tmp_path):
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            path = tmp_path / name
            assert cli.main(["simulate", "--circuit", files["mixed2"], "--k", "2", "--prover", "honest", "--seed", "5", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_budget_must_be_positive(self, files):
        with pytest.raises(SystemExit) as exc:
            cli.main(["simulate", "--circuit", files["bell"], "--budget", "0"])
        assert exc.value.code == 2


class TestReduce:
    def test_orthogonal(self, capsys, files):
        code, out, _ = run(capsys, "reduce", "qsd-to-qsep", "--circuit", files["zero"], "--circuit", files["one"])
        rec = record(out)
        assert code == 0 and rec["metadata"]["separable_upper"] == pytest.approx(0.0, abs=1e-12)
        assert ci.circuit_from_dict(rec["circuit"]).wire_dims == (2, 2, 2)

    def test_identical(self, capsys, files):
        _, out, _ = run(capsys, "reduce", "qsd-to-qsep", "--circuit", files["mixed"], "--circuit", files["mixed"])
        assert record(out)["metadata"]["locc_lower"] >= 0.2

    def test_near_identical_bound(self, capsys, files):
        _, out, _ = run(capsys, "reduce", "qsd-to-qsep", "--circuit", files["zero"], "--circuit", files["near"])
        meta = record(out)["metadata"]
        assert meta["eps_no"] == pytest.approx(1e-4, rel=1e-9)
        assert meta["no_locc_bound"] == pytest.approx(0.18, abs=1e-9)
        assert meta["locc_lower"] >= meta["no_locc_bound"]

    def test_wmem(self, capsys, files):
        code, out, _ = run(capsys, "reduce", "wmem-to-qsep", "--state", files["rho"], "--eps", "1")
        meta = record(out)["metadata"]
        assert code == 0 and meta["delta_s"] == pytest.approx(1 / math.sqrt(153), abs=1e-12)

    def test_wmem_degenerate(self, capsys, files):
        code, _, _ = run(capsys, "reduce", "wmem-to-qsep", "--state", files["rho"], "--eps", "1e-15")
        assert code == 4

    def test_channel(self, capsys, files, tmp_path):
        ch = ci.MixedCircuit((2, 2), (), ci.Partition((1,), ((0,),)), inputs=(0,))
        path = tmp_path / "ch.json"
        ci.dump_circuit(ch, path)
        code, out, _ = run(capsys, "reduce", "qcd-to-qsep-channel", "--circuit", str(path), "--circuit", str(path))
        assert code == 0 and record(out)["circuit"]["inputs"] == [2]

    def test_needs_two_circuits(self, capsys, files):
        code, _, _ = run(capsys, "reduce", "qsd-to-qsep", "--circuit", files["zero"])
        assert code == 2


class TestBounds:
    def test_lemma1_csv(self, capsys):
        code, out, _ = run(capsys, "bounds", "lemma1", "--eps-list", "0.2", "--delta-list", "0.1", "--dim-list", "2")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0 and rows[0] == ["eps", "delta", "dim_a", "value"]
        assert rows[1][-1] == "1110"

    def test_soundness(self, capsys):
        _, out, _ = run(capsys, "bounds", "soundness", "--delta-list", "0.2")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["delta_s", "value"] and float(rows[1][1]) == 0.995

    @pytest.mark.parametrize("kind", sorted(cli.BOUND_HEADERS))
    def test_header_ends_with_value(self, capsys, kind):
        code, out, _ = run(capsys, "bounds", kind, "--k-list", "40")
        assert code == 0 and out.splitlines()[0].split(",")[-1] == "value"

    def test_invalid_gap(self, capsys):
        code, _, err = run(capsys, "bounds", "lemma1", "--delta-list", "0.3")
        assert code == 2 and "delta" in err

    def test_full_precision(self, capsys):
        _, out, _ = run(capsys, "bounds", "prop1", "--k-list", "11", "--delta-list", "0", "--format", "json")
        text = out.split('"value": ')[1].rstrip("}\n")
        assert len(text.replace("0.", "").lstrip("0").replace(".", "")) >= 16
        assert float(text) == pytest.approx(math.sqrt(16 * math.log(2) / 11))


class TestOtherCommands:
    def test_distance(self, capsys, files):
        code, out, _ = run(capsys, "distance", "--circuit", files["bell"])
        rec = record(out)
        assert code == 0 and rec["lower"] == pytest.approx(1.0) and rec["ppt"] is False

    def test_chsh(self, capsys, files):
        _, out, _ = run(capsys, "chsh", "--circuit", files["bell"])
        assert record(out)["p_win"] == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)

    def test_extend(self, capsys, files):
        _, out, _ = run(capsys, "extend-test", "--circuit", files["bell"], "--k", "2")
        rec = record(out)
        assert rec["max_k_extendible_fidelity"] == pytest.approx(0.75, abs=1e-6) and rec["witness_is_k_extension"]

    def test_csv_run_output(self, capsys, files):
        _, out, _ = run(capsys, "chsh", "--state", files["rho"], "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["command", "p_win", "gap"]

    def test_needs_input(self, capsys):
        code, _, _ = run(capsys, "chsh")
        assert code == 2


def test_dumps_float_precision():
    assert cli.dumps({"x": 0.1}) == '{"x": 0.10000000000000001}'
    assert cli.dumps([1.0, 2]) == "[1.0, 2]"
