"""Dense spin-chain Hamiltonians and spectral queries.

Builds the Ising Hamiltonians along z or x,

    H^(zeta) = (b/2) sum_j sigma_j^zeta - sum_{i<j} J_ij sigma_i^zeta sigma_j^zeta,

and the duty-cycle-weighted mixture H_eff = beta * (H^(z) + alpha * H^(x))
that the stroboscopic pulse protocol realizes.  Everything is in angular
frequency units (hbar = 1): matrix entries are rad/s.

Basis convention: spin 1 (x) ... (x) spin N in the sigma^z eigenbasis, with
bit 0 = spin up (sigma^z = +1).  Dense matrices only; the configured
maximum is :data:`MAX_SPINS` qubits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericalError

MAX_SPINS = 10

#: Relative eigenvalue spacing below which a ground space counts as degenerate.
DEGENERACY_RTOL = 1e-9

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class DegenerateGroundStateWarning(UserWarning):
    """The queried Hamiltonian has a (numerically) degenerate ground space."""


def _check_dimension(n: int):
    if n < 1:
        raise ConfigError("need at least one spin")
    if n > MAX_SPINS:
        raise ConfigError(f"{n} spins exceed the dense-matrix limit of {MAX_SPINS}")


@lru_cache(maxsize=128)
def site_operator(axis: str, site: int, n: int) -> np.ndarray:
    """sigma^axis acting on ``site`` (0-based) of an ``n``-spin register."""
    _check_dimension(n)
    if site < 0 or site >= n:
        raise ConfigError(f"site {site} out of range for {n} spins")
    op = np.array([[1.0 + 0.0j]])
    for j in range(n):
        op = np.kron(op, PAULI[axis] if j == site else PAULI["i"])
    op.flags.writeable = False  # cached: guard against caller mutation
    return op


@lru_cache(maxsize=32)
def total_spin(axis: str, n: int) -> np.ndarray:
    """sum_j sigma_j^axis on ``n`` spins."""
    _check_dimension(n)
    out = sum(site_operator(axis, j, n) for j in range(n))
    out.flags.writeable = False
    return out


def coupling_sum(axis: str, couplings) -> np.ndarray:
    """sum_{i<j} J_ij sigma_i^axis sigma_j^axis for an N x N coupling matrix."""
    j = validate_couplings(couplings)
    n = j.shape[0]
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(n):
        for b in range(a + 1, n):
            if j[a, b] != 0.0:
                out += j[a, b] * (site_operator(axis, a, n) @ site_operator(axis, b, n))
    return out


def validate_couplings(couplings) -> np.ndarray:
    """Validate symmetry, zero diagonal and the spin-count limit; return array."""
    j = np.asarray(couplings, dtype=float)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise ConfigError("coupling matrix must be square")
    _check_dimension(j.shape[0])
    scale = max(np.abs(j).max(), 1e-300)
    if np.abs(j - j.T).max() > 1e-9 * scale:
        raise ConfigError("coupling matrix must be symmetric")
    if np.abs(np.diag(j)).max() > 0.0:
        raise ConfigError("coupling matrix must have zero diagonal")
    return j


@dataclass(frozen=True)
class SpinModelParams:
    """Couplings plus the (b, alpha, beta) knobs of the effective model."""

    couplings: np.ndarray  # rad/s, symmetric, zero diagonal
    b: float  # effective field, rad/s
    alpha: float  # x-interaction admixture in [0, 1]
    beta: float = 1.0  # overall duty factor in (0, 1]

    def __post_init__(self):
        validate_couplings(self.couplings)
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.beta <= 0.0:
            raise ConfigError("beta must be positive")

    @property
    def n_spins(self) -> int:
        return np.asarray(self.couplings).shape[0]


def build_ising(axis: str, b: float, couplings, n_spins: int | None = None) -> np.ndarray:
    """Ising Hamiltonian along ``axis`` ('x' or 'z'), as a dense Hermitian matrix.

    H = (b/2) sum_j sigma_j^axis - sum_{i<j} J_ij sigma_i^axis sigma_j^axis.
    The pair sum runs over ordered pairs i < j (each unordered pair once).
    """
    if axis not in ("x", "z"):
        raise ConfigError("axis must be 'x' or 'z'")
    j = validate_couplings(couplings)
    n = j.shape[0]
    if n_spins is not None and n_spins != n:
        raise ConfigError("n_spins does not match the coupling matrix")
    return 0.5 * b * total_spin(axis, n) - coupling_sum(axis, j)


def build_effective(params: SpinModelParams) -> np.ndarray:
    """Stroboscopic-limit Hamiltonian beta * (H^(z) + alpha * H^(x))."""
    hz = build_ising("z", params.b, params.couplings)
    hx = build_ising("x", params.b, params.couplings)
    return params.beta * (hz + params.alpha * hx)


# ---------------------------------------------------------------------------
# Spectral queries
# ---------------------------------------------------------------------------


def _eigh_checked(h):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ConfigError("Hamiltonian must be a square matrix")
    scale = max(np.abs(h).max(), 1e-300)
    if np.abs(h - h.conj().T).max() > 1e-9 * scale:
        raise ConfigError("Hamiltonian must be Hermitian")
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def _degenerate(w) -> bool:
    spread = max(float(w[-1] - w[0]), 1e-300)
    return bool(w[1] - w[0] < DEGENERACY_RTOL * spread)


def ground_state(h):
    """Lowest eigenpair (E0, psi0); warns when the ground space is degenerate."""
    w, v = _eigh_checked(h)
    if w.size > 1 and _degenerate(w):
        warnings.warn("degenerate ground space; returned state is one member",
                      DegenerateGroundStateWarning, stacklevel=2)
    return float(w[0]), v[:, 0]


def gap(h) -> float:
    """Energy gap E1 - E0; returns 0 and warns when degenerate."""
    w, _ = _eigh_checked(h)
    if w.size < 2:
        raise ConfigError("gap needs at least a two-dimensional Hamiltonian")
    if _degenerate(w):
        warnings.warn("degenerate ground space; gap reported as 0",
                      DegenerateGroundStateWarning, stacklevel=2)
        return 0.0
    return float(w[1] - w[0])


def ground_space_projector(h) -> np.ndarray:
    """Projector onto all eigenvectors within the degeneracy window of E0."""
    w, v = _eigh_checked(h)
    spread = max(float(w[-1] - w[0]), 1e-300)
    members = v[:, w - w[0] < DEGENERACY_RTOL * spread]
    return members @ members.conj().T
