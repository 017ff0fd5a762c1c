import math

import numpy as np
import pytest
from scipy.optimize import minimize

from qsep import circuit as ci
from qsep import extend as ex
from qsep import qstate as qs
from qsep import reduction as rd
from qsep.errors import DimensionMismatchError, ValidationError

from conftest import PHI_PLUS, pure_circuit

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
COS2 = math.cos(math.pi / 8) ** 2


def mixed_circuit(m):
    return ci.state_circuit(qs.DensityMatrix.coerce(m, (m.shape[0],)))


def pair_at_distance(dist):
    """Pure qubit states with trace distance ``dist``."""
    # ||psi0 - psi1||_1 = 2 sin(theta) for real states at angle theta
    theta = math.asin(dist / 2)
    return np.array([1, 0]), np.array([math.cos(theta), math.sin(theta)])


def output(c0, c1):
    return ci.run_circuit(rd.qsd_to_qsep(c0, c1)).post_trace


def _bloch(t, p):
    return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])


def _observable(t, p):
    n = _bloch(t, p)
    return n[0] * rd.PAULI_X + n[1] * np.array([[0, -1j], [1j, 0]]) + n[2] * rd.PAULI_Z


def _ket(t, p):
    return np.array([math.cos(t / 2), np.exp(1j * p) * math.sin(t / 2)])


def separable_chsh_max():
    # product states and all four observables optimized jointly
    def neg(x):
        a, b = _ket(*x[0:2]), _ket(*x[2:4])
        s = rd.ChshSettings((_observable(*x[4:6]), _observable(*x[6:8])), (_observable(*x[8:10]), _observable(*x[10:12])))
        v = np.kron(a, b)
        return -rd.chsh_value(np.outer(v, v.conj()), s)

    rng = np.random.default_rng(0)
    return max(-minimize(neg, rng.uniform(0, 2 * math.pi, 12), method="Nelder-Mead", options={"maxfev": 6000}).fun for _ in range(10))


def entangled_chsh_max():
    def neg(x):
        s = rd.ChshSettings((_observable(*x[0:2]), _observable(*x[2:4])), (_observable(*x[4:6]), _observable(*x[6:8])))
        return -rd.chsh_value(np.outer(PHI_PLUS, PHI_PLUS), s)

    rng = np.random.default_rng(1)
    return max(-minimize(neg, rng.uniform(0, 2 * math.pi, 8), method="Nelder-Mead", options={"maxfev": 6000}).fun for _ in range(5))


class TestChsh:
    def test_bell(self, phi_plus):
        assert rd.chsh_value(phi_plus) == pytest.approx(COS2, abs=1e-12)

    def test_product_zero(self):
        assert rd.chsh_value(np.diag([1.0, 0, 0, 0])) == pytest.approx(0.5 + math.sqrt(2) / 8, abs=1e-12)

    def test_separable_max(self):
        assert separable_chsh_max() == pytest.approx(0.75, abs=1e-3)

    def test_standard_settings_optimal_for_bell(self):
        assert entangled_chsh_max() == pytest.approx(COS2, abs=1e-6)

    def test_gap(self, phi_plus):
        gap = rd.chsh_1locc_gap(phi_plus)
        assert gap == pytest.approx(2 * (COS2 - 0.75), abs=1e-12)
        assert gap >= 0.2

    @pytest.mark.parametrize("seed", range(5))
    def test_product_states_no_gap(self, seed):
        rng = np.random.default_rng(seed)
        prod = np.kron(qs.random_density_matrix(2, rng), qs.random_density_matrix(2, rng))
        assert rd.chsh_1locc_gap(prod) == 0.0

    def test_werner_monotone(self):
        ws = np.linspace(0, 1, 41)
        gaps = [rd.chsh_1locc_gap(w * np.outer(PHI_PLUS, PHI_PLUS) + (1 - w) * np.eye(4) / 4) for w in ws]
        assert all(b >= a for a, b in zip(gaps, gaps[1:]))
        assert max(abs(b - a) for a, b in zip(gaps, gaps[1:])) < 0.02

    def test_gap_is_locc_lower_bound(self, phi_plus):
        # the gap lower-bounds the 1-LOCC distance to any separable state
        for sigma in (np.diag([0.5, 0, 0, 0.5]), np.eye(4) / 4):
            lower = qs.one_way_locc_distance_lower(phi_plus, qs.DensityMatrix(sigma, (2, 2)))
            assert lower >= rd.chsh_1locc_gap(phi_plus) - 1e-9

    def test_rejects_non_qubit(self):
        with pytest.raises(DimensionMismatchError):
            rd.chsh_value(np.eye(6) / 6)

    def test_bad_settings(self):
        with pytest.raises(ValidationError):
            rd.ChshSettings((np.eye(2), np.diag([1.0, 0.5])), (np.eye(2), np.eye(2)))


class TestQsdToQsep:
    def test_orthogonal_exact(self):
        c0, c1 = pure_circuit(KET0, (2,)), pure_circuit(KET1, (2,))
        out = output(c0, c1)
        assert np.abs(out.matrix - rd.separable_target(c0, c1).matrix).max() < 1e-15
        assert ex.ppt_check(out)

    def test_identical_mixed_is_entangled(self):
        c = mixed_circuit(np.eye(2) / 2)
        out = output(c, c)
        assert out.dims == (2, 4)
        assert not ex.ppt_check(out)

    @pytest.mark.parametrize("seed", range(3))
    def test_identical_decouples(self, seed):
        rng = np.random.default_rng(seed)
        c = mixed_circuit(qs.random_density_matrix(2, rng))
        st = rd.decoupled_state(c, c)
        assert qs.fidelity(st.reduced([0, 1]), np.outer(PHI_PLUS, PHI_PLUS)) == pytest.approx(1.0, abs=1e-12)

    def test_mismatched_pair(self):
        with pytest.raises(DimensionMismatchError):
            rd.qsd_to_qsep(pure_circuit(KET0, (2,)), pure_circuit(np.eye(4)[0], (2, 2)))

    def test_state_circuits_only(self):
        ch = ci.MixedCircuit((2,), (), ci.Partition((), ((0,),)), inputs=(0,))
        with pytest.raises(ValidationError):
            rd.qsd_to_qsep(ch, ch)

    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
    def test_yes_fidelity(self, eps):
        a, b = pair_at_distance(2 - eps)
        c0, c1 = pure_circuit(a, (2,)), pure_circuit(b, (2,))
        f = qs.fidelity(rd.separable_target(c0, c1), output(c0, c1))
        assert f >= 1 - eps - 1e-12


class TestSeparableTarget:
    @pytest.mark.parametrize("seed", range(4))
    def test_ppt(self, seed):
        rng = np.random.default_rng(seed)
        c0 = mixed_circuit(qs.random_density_matrix(2, rng))
        c1 = mixed_circuit(qs.random_density_matrix(2, rng))
        assert ex.ppt_check(rd.separable_target(c0, c1))

    def test_purification_marginal(self, rng):
        c0 = mixed_circuit(qs.random_density_matrix(2, rng))
        c1 = mixed_circuit(qs.random_density_matrix(2, rng))
        v = rd.separable_purification(c0, c1)
        d_r = c0.reference_dim
        m = qs.PureState(v, (2, 2, d_r, 2, 2)).reduced([0, 1, 2]).matrix
        assert np.allclose(m, rd.separable_target(c0, c1).matrix)


class TestHelstromIsometry:
    def test_constant_flag(self):
        v = rd.helstrom_isometry(np.eye(2), np.zeros((2, 2)))
        assert np.allclose(v, np.kron(np.eye(2), KET0[:, None]))

    def test_copy_basis(self):
        v = rd.helstrom_isometry(np.diag([1.0, 0]), np.diag([0, 1.0]))
        assert np.allclose(v, [[1, 0], [0, 0], [0, 0], [0, 1]])

    def test_rejects_non_projector(self):
        with pytest.raises(ValidationError):
            rd.helstrom_isometry(np.eye(2) / 2, np.eye(2) / 2)

    def test_orthogonal_overlap(self):
        c0, c1 = pure_circuit(KET0, (2,)), pure_circuit(KET1, (2,))
        pi0, pi1 = qs.helstrom_measurement(np.diag([1.0, 0]), np.diag([0, 1.0]))
        iso = rd.helstrom_isometry(pi0, pi1)
        # reduction state ordered (A, B, R, S) with one-dimensional R
        phi = (np.kron(np.kron(KET0, KET0), KET0) + np.kron(np.kron(KET1, KET1), KET1)) / math.sqrt(2)
        got = np.kron(np.eye(4), iso) @ phi
        assert abs(np.vdot(rd.separable_purification(c0, c1), got)) == pytest.approx(1.0, abs=1e-12)


class TestDecoupling:
    def test_identical_exact(self, rng):
        c = mixed_circuit(qs.random_density_matrix(2, rng))
        st = rd.decoupled_state(c, c)
        psi_rs = ci.run_circuit(c).pre_trace
        # (A, B, R, S) factorizes as Phi+ on AB times the circuit's R S state
        order = list(c.partition.R) + [w for p in c.partition.parties for w in p]
        rs = psi_rs.amplitudes.reshape(c.wire_dims).transpose(order).reshape(-1)
        assert abs(np.vdot(np.kron(PHI_PLUS, rs), st.amplitudes)) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_identity_uhlmann(self):
        c = mixed_circuit(np.eye(2) / 2)
        u = rd.decoupling_unitary(c, c)
        assert np.allclose(u, np.eye(u.shape[0]))

    @pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
    def test_near_identical(self, eps):
        a, b = pair_at_distance(eps)
        c0, c1 = pure_circuit(a, (2,)), pure_circuit(b, (2,))
        st = rd.decoupled_state(c0, c1)
        dist = qs.trace_distance(st.reduced([0, 1]), np.outer(PHI_PLUS, PHI_PLUS))
        assert dist <= 2 * math.sqrt(eps)

    def test_certificate_identical(self):
        c = mixed_circuit(np.eye(2) / 2)
        assert rd.no_side_certificate(c, c) >= 0.2


class TestChannelReduction:
    def constant(self, v):
        prep = pure_circuit(v, (2,))
        # input wire 1 is untouched and traced with R
        return ci.MixedCircuit((2, 2), prep.gates, ci.Partition((1,), ((0,),)), inputs=(1,))

    def identity_channel(self):
        return ci.MixedCircuit((2, 2), (), ci.Partition((1,), ((0,),)), inputs=(0,))

    def test_constant_orthogonal(self, rng):
        red = rd.qcd_to_qsep_channel(self.constant(KET0), self.constant(KET1))
        for _ in range(3):
            out = ci.run_channel_circuit(red, qs.random_pure_state(2, rng))
            assert ex.ppt_check(out)

    def test_identity_channels_entangled(self, rng):
        ch = self.identity_channel()
        red = rd.qcd_to_qsep_channel(ch, ch)
        for _ in range(5):
            assert not ex.ppt_check(ci.run_channel_circuit(red, qs.random_pure_state(2, rng)))

    def test_constant_matches_state_reduction(self, rng):
        a, b = qs.random_pure_state(2, rng), qs.random_pure_state(2, rng)
        red = rd.qcd_to_qsep_channel(self.constant(a), self.constant(b))
        state_red = rd.qsd_to_qsep(pure_circuit(a, (2,)), pure_circuit(b, (2,)))
        got = ci.run_channel_circuit(red, KET0)
        want = ci.run_circuit(state_red).post_trace
        # B also carries the untouched input wire, left in |0>
        assert got.dims == (2, 4)
        assert np.allclose(got.matrix, np.kron(want.matrix, np.diag([1.0, 0.0])), atol=1e-12)
