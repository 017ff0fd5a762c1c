import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsep import linalg as la
from qsep.errors import DimensionLimitError, DimensionMismatchError

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
PHI = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def random_rho(rng, d):
    g = random_matrix(rng, d)
    r = g @ g.conj().T
    return r / np.trace(r)


class TestTensor:
    def test_identity(self):
        assert np.array_equal(la.tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_shape(self, rng):
        assert la.tensor(random_matrix(rng, 2, 3), random_matrix(rng, 4, 5)).shape == (8, 15)

    def test_x_z_against_index_expansion(self):
        got = la.tensor(X, Z)
        want = np.zeros((4, 4), dtype=complex)
        for i, j, k, l in itertools.product(range(2), repeat=4):
            want[2 * i + k, 2 * j + l] = X[i, j] * Z[k, l]
        assert np.array_equal(got, want)

    def test_variadic(self):
        assert la.tensor(X, X, X).shape == (8, 8)


class TestPartialTrace:
    def test_bell_marginal(self):
        assert np.allclose(la.partial_trace(PHI, [2, 2], [0]), np.eye(2) / 2)

    def test_product_factorizes(self, rng):
        a, b = random_rho(rng, 2), random_rho(rng, 3)
        assert np.allclose(la.partial_trace(np.kron(a, b), [2, 3], [0]), a)
        assert np.allclose(la.partial_trace(np.kron(a, b), [2, 3], [1]), b)

    def test_order_of_traces(self, rng):
        r = random_rho(rng, 4)
        ab = np.trace(la.partial_trace(r, [2, 2], [0]))
        ba = np.trace(la.partial_trace(r, [2, 2], [1]))
        direct = sum(r[i, i] for i in range(4))
        assert np.isclose(ab, direct) and np.isclose(ba, direct)

    def test_empty_keep_rejected(self):
        with pytest.raises(ValueError):
            la.partial_trace(np.eye(4) / 4, [2, 2], [])

    def test_against_direct_summation(self, rng):
        r = random_rho(rng, 12)
        t = r.reshape(2, 3, 2, 2, 3, 2)
        want = np.zeros((4, 4), dtype=complex)
        for a, c, a2, c2 in itertools.product(range(2), range(2), range(2), range(2)):
            want[2 * a + c, 2 * a2 + c2] = sum(t[a, b, c, a2, b, c2] for b in range(3))
        assert np.allclose(la.partial_trace(r, [2, 3, 2], [0, 2]), want)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            la.partial_trace(np.eye(4), [2, 3], [0])

    def test_reduced_density_matches(self, rng):
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        v /= np.linalg.norm(v)
        assert np.allclose(la.reduced_density(v, [2, 4], [1]), la.partial_trace(np.outer(v, v.conj()), [2, 4], [1]))


class TestTraceNorm:
    @pytest.mark.parametrize(
        "m, want",
        [(Z, 2.0), (np.diag([3.0, -4.0]), 7.0), (PHI - np.eye(4) / 4, 1.5)],
    )
    def test_values(self, m, want):
        assert la.trace_norm(m) == pytest.approx(want, abs=1e-12)

    def test_triangle(self, rng):
        a, b = random_matrix(rng, 4), random_matrix(rng, 4)
        a, b = a + a.conj().T, b + b.conj().T
        assert la.trace_norm(a + b) <= la.trace_norm(a) + la.trace_norm(b) + 1e-12


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(la.psd_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(la.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    @pytest.mark.parametrize("d", [2, 5, 16])
    def test_round_trip(self, rng, d):
        m = random_rho(rng, d)
        s = la.psd_sqrt(m)
        assert np.max(np.abs(s @ s - m)) < la.TOL_EIG

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            la.psd_sqrt(np.diag([1.0, -0.5]))


class TestEigh:
    @pytest.mark.parametrize("d", [3, 64, 256])
    def test_residual(self, rng, d):
        h = random_matrix(rng, d)
        h = h + h.conj().T
        w, v = la.eigh(h)
        assert np.max(np.abs(h @ v - v * w)) < la.TOL_EIG * max(1.0, np.abs(w).max())
        assert np.all(np.diff(w) >= 0)


class TestPermutations:
    def test_identity(self):
        assert np.array_equal(la.permutation_unitary([0, 1, 2], 2), np.eye(8))

    def test_swap(self):
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
        assert np.array_equal(la.permutation_unitary([1, 0], 2), swap)

    def test_slot_semantics(self):
        # slot j is carried to slot perm[j]
        w = la.permutation_unitary([1, 2, 0], 2)
        e = np.eye(2)
        v = la.tensor(e[0][:, None], e[1][:, None], e[1][:, None]).ravel()
        out = la.tensor(e[1][:, None], e[0][:, None], e[1][:, None]).ravel()
        assert np.array_equal(w @ v, out)

    @pytest.mark.parametrize("p, q", list(itertools.product(itertools.permutations(range(3)), repeat=2)))
    def test_homomorphism(self, p, q):
        lhs = la.permutation_unitary(p, 2) @ la.permutation_unitary(q, 2)
        assert np.array_equal(lhs, la.permutation_unitary(la.compose(p, q), 2))

    def test_permute_subsystems_operator(self, rng):
        a, b = random_matrix(rng, 2), random_matrix(rng, 3)
        assert np.allclose(la.permute_subsystems(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a))

    def test_permute_subsystems_vector(self, rng):
        a, b = rng.normal(size=2), rng.normal(size=3)
        assert np.allclose(la.permute_subsystems(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a))


class TestPartialTranspose:
    def test_bell_min_eigenvalue(self):
        assert np.linalg.eigvalsh(la.partial_transpose(PHI, [2, 2], 1))[0] == pytest.approx(-0.5)

    def test_product(self, rng):
        a, b = random_matrix(rng, 2), random_matrix(rng, 3)
        assert np.allclose(la.partial_transpose(np.kron(a, b), [2, 3], 1), np.kron(a, b.T))


class TestParameterisation:
    @given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
    @settings(max_examples=50, deadline=None)
    def test_exp_of_hermitian_is_unitary(self, theta):
        h = la.hermitian_from_params(np.array(theta), 3)
        assert la.is_hermitian(h)
        assert la.is_unitary(la.unitary_from_hermitian(h), 1e-9)


class TestDimLimit:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("QSEP_DIM_LIMIT", "16")
        la.set_dim_limit(None)
        assert la.get_dim_limit() == 16
        with pytest.raises(DimensionLimitError):
            la.check_dim(32)

    def test_explicit_setting_wins(self, monkeypatch):
        monkeypatch.setenv("QSEP_DIM_LIMIT", "16")
        la.set_dim_limit(64)
        try:
            assert la.check_dim(32) == 32
        finally:
            la.set_dim_limit(None)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_trace_preserved_by_partial_trace(da, db, seed):
    r = random_rho(np.random.default_rng(seed), da * db)
    assert np.trace(la.partial_trace(r, [da, db], [1])) == pytest.approx(1.0)
