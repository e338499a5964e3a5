"""Reduced states, two-qubit concurrence, fidelities, trajectory summaries.

The protocol is scored by two numbers per sample: the fidelity with the
instantaneous ground state of the effective model, and the concurrence of
the two end spins (the entanglement the preparation is after).  Both pure
state vectors and density matrices are accepted everywhere.
"""

from __future__ import annotations

import string
import warnings

import numpy as np

from . import spins
from .errors import ConfigError

_SIGMA_YY = np.kron(spins.PAULI["y"], spins.PAULI["y"]).real  # real matrix, entries 0,+-1


def _infer_spins(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ConfigError(f"state dimension {dim} is not a power of two")
    return n


def is_density_matrix(state) -> bool:
    return np.asarray(state).ndim == 2


def reduced_density(state, pair, n_spins: int | None = None) -> np.ndarray:
    """Reduced 4x4 density matrix of the spin pair ``(i, j)``, 0-based, i < j.

    Accepts a pure state vector or a density matrix on the full register;
    traces out every other spin.  The result is Hermitian with unit trace.
    """
    psi = np.asarray(state)
    dim = psi.shape[0]
    n = _infer_spins(dim) if n_spins is None else n_spins
    i, j = pair
    if not (0 <= i < j < n):
        raise ConfigError(f"pair {pair} out of range for {n} spins (need 0 <= i < j < n)")

    letters = string.ascii_lowercase
    if n > 12:
        raise ConfigError("reduced_density supports at most 12 spins")
    if psi.ndim == 1:
        # rho_red[(a_i a_j),(b_i b_j)] = sum_rest psi[..a_i..a_j..] psi*[..b_i..b_j..]
        ket = psi.reshape((2,) * n)
        sub_ket = letters[:n]
        sub_bra = "".join(letters[n + k] if k in (i, j) else letters[k] for k in range(n))
        out = "".join((letters[i], letters[j], letters[n + i], letters[n + j]))
        rho = np.einsum(f"{sub_ket},{sub_bra}->{out}", ket, ket.conj())
    elif psi.ndim == 2:
        if psi.shape != (dim, dim):
            raise ConfigError("density matrix must be square")
        full = psi.reshape((2,) * (2 * n))
        sub_row = letters[:n]
        sub_col = "".join(letters[n + k] if k in (i, j) else letters[k] for k in range(n))
        out = "".join((letters[i], letters[j], letters[n + i], letters[n + j]))
        rho = np.einsum(f"{sub_row}{sub_col}->{out}", full)
    else:
        raise ConfigError("state must be a vector or a matrix")
    return rho.reshape(4, 4)


def concurrence(rho, *, positivity_atol: float = 1e-9) -> float:
    """Two-qubit concurrence of a 4x4 density matrix (Wootters construction).

    C = max(0, l1 - l2 - l3 - l4) where l_k are the decreasingly ordered
    square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
    Equals 0 for separable states and 1 for Bell states.  Small negative
    eigenvalues from roundoff are clipped; violations beyond
    ``positivity_atol`` are clipped with a warning.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ConfigError("concurrence needs a 4x4 two-qubit density matrix")
    herm_dev = np.abs(rho - rho.conj().T).max()
    trace_dev = abs(rho.trace() - 1.0)
    if herm_dev > 1e-6 or trace_dev > 1e-6:
        raise ConfigError("not a density matrix (Hermiticity/trace violated)")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.min() < -positivity_atol:
        warnings.warn(
            f"density matrix eigenvalue {evals.min():.2e} < 0 clipped in concurrence",
            stacklevel=2)
    rho_tilde = _SIGMA_YY @ rho.conj() @ _SIGMA_YY
    lam = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sqrt(np.clip(lam.real, 0.0, None))
    lam[::-1].sort()
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fidelity(state, reference) -> float:
    """Overlap with a pure reference: |<ref|psi>|^2, or <ref|rho|ref> for mixed."""
    ref = np.asarray(reference, dtype=complex)
    if ref.ndim != 1:
        raise ConfigError("reference must be a pure state vector")
    norm = np.linalg.norm(ref)
    if abs(norm - 1.0) > 1e-8:
        raise ConfigError("reference state must be normalized")
    s = np.asarray(state, dtype=complex)
    if s.ndim == 1:
        if s.shape != ref.shape:
            raise ConfigError("state and reference dimensions differ")
        return float(abs(np.vdot(ref, s)) ** 2)
    if s.shape != (ref.size, ref.size):
        raise ConfigError("state and reference dimensions differ")
    return float(np.real(np.vdot(ref, s @ ref)))


def subspace_fidelity(state, projector) -> float:
    """<psi|P|psi> or Tr(P rho) for a ground-space projector P."""
    p = np.asarray(projector, dtype=complex)
    s = np.asarray(state, dtype=complex)
    if s.ndim == 1:
        return float(np.real(np.vdot(s, p @ s)))
    return float(np.real(np.trace(p @ s)))


def end_to_end_concurrence(state, n_spins: int | None = None) -> float:
    """Concurrence of the first and last spins of the register."""
    n = _infer_spins(np.asarray(state).shape[0]) if n_spins is None else n_spins
    return concurrence(reduced_density(state, (0, n - 1), n))


def trajectory_observables(trajectory, couplings):
    """Score a run sample by sample against the instantaneous effective model.

    For each stored sample n the effective Hamiltonian
    H_eff(alpha_n, b_n, beta_n) is diagonalized once, giving the fidelity
    with its ground state, the end-to-end concurrence of the sample, and
    the instantaneous gap (rad/s).  A degenerate instantaneous ground
    space is handled by projecting onto the full ground space; the
    ``degenerate`` column records where that happened.

    Returns a dict of equal-length 1-D arrays:
    ``t, alpha, b, beta, fidelity, concurrence, gap, degenerate``.
    """
    j = spins.validate_couplings(couplings)
    n = j.shape[0]
    times = np.asarray(trajectory.times)
    count = times.size
    fid = np.empty(count)
    conc = np.empty(count)
    gaps = np.empty(count)
    degenerate = np.zeros(count, dtype=bool)
    for k in range(count):
        params = spins.SpinModelParams(
            couplings=j, b=float(trajectory.bs[k]),
            alpha=float(trajectory.alphas[k]), beta=float(trajectory.betas[k]))
        h = spins.build_effective(params)
        w, v = np.linalg.eigh(h)
        spread = max(float(w[-1] - w[0]), 1e-300)
        state = trajectory.states[k]
        if w[1] - w[0] < spins.DEGENERACY_RTOL * spread:
            degenerate[k] = True
            members = v[:, w - w[0] < spins.DEGENERACY_RTOL * spread]
            fid[k] = subspace_fidelity(state, members @ members.conj().T)
            gaps[k] = 0.0
        else:
            fid[k] = fidelity(state, v[:, 0])
            gaps[k] = float(w[1] - w[0])
        conc[k] = end_to_end_concurrence(state, n)
    return {
        "t": times,
        "alpha": np.asarray(trajectory.alphas, dtype=float),
        "b": np.asarray(trajectory.bs, dtype=float),
        "beta": np.asarray(trajectory.betas, dtype=float),
        "fidelity": fid,
        "concurrence": conc,
        "gap": gaps,
        "degenerate": degenerate,
    }
