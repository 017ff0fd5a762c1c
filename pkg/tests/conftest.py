import numpy as np
import pytest

from qsep import circuit as ci
from qsep import extend as ex
from qsep import qstate as qs

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def random_separable(rng: np.random.Generator, n_terms: int, da: int = 2, db: int = 2) -> ex.SeparableDecomposition:
    weights = rng.dirichlet(np.ones(n_terms))
    factors = tuple((qs.random_pure_state(da, rng), qs.random_pure_state(db, rng)) for _ in range(n_terms))
    return ex.SeparableDecomposition(weights, factors)


def pure_circuit(vec, dims=(2, 2)) -> ci.MixedCircuit:
    return ci.synthesize_state_prep(qs.PureState(np.asarray(vec, dtype=complex), tuple(dims)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def phi_plus():
    return qs.DensityMatrix.from_vector(PHI_PLUS, (2, 2))


@pytest.fixture
def bell_circuit():
    return pure_circuit(PHI_PLUS)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def add(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
