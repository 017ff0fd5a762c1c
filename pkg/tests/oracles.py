"""Independent prover-side brute force used by the protocol tests."""

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize


def _unitary(theta, d):
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    n = len(iu[0])
    h[iu] = theta[:n] + 1j * theta[n : 2 * n]
    h = h + h.conj().T
    h[np.diag_indices(d)] = theta[2 * n :]
    return expm(1j * h)


def _swap_test_accept(psi_ab1r_b2, da, db, rest):
    # amplitude tensor (a, b1, rest, b2); projector (I + SWAP_{b1 b2}) / 2
    t = psi_ab1r_b2.reshape(da, db, rest, db)
    sym = (t + t.transpose(0, 3, 2, 1)) / 2
    return float(np.vdot(sym, sym).real)


def brute_force_k2(psi_abr, da, db, dr, junk=2, restarts=6, seed=0, method="Nelder-Mead", maxfev=20000):
    """Max acceptance over prover unitaries on ``R ⊗ B2 ⊗ J`` for k = 2.

    ``psi_abr`` is the verifier's pure state on ``(A, B1, R)``; the prover
    receives R, appends fresh ``B2`` and ``J`` in ``|0>``, applies a unitary,
    and returns ``B2``.
    """
    d = dr * db * junk
    rng = np.random.default_rng(seed)
    start = np.zeros(db * junk)
    start[0] = 1.0

    def neg(theta):
        u = _unitary(theta, d)
        v = np.kron(psi_abr, start).reshape(da * db, d) @ u.T
        # columns ordered (r, b2, j) -> move b2 last
        v = v.reshape(da, db, dr, db, junk).transpose(0, 1, 2, 4, 3).reshape(-1)
        return -_swap_test_accept(v, da, db, dr * junk)

    opts = {"maxfev": maxfev}
    if method == "Nelder-Mead":
        opts.update(xatol=1e-9, fatol=1e-12)
    best = 0.0
    for _ in range(restarts):
        res = minimize(neg, rng.normal(scale=0.5, size=d * d), method=method, options=opts)
        best = max(best, -res.fun)
    return best
