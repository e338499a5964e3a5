"""Static chain physics: equilibria, normal modes, gradient-induced couplings.

A string of ions in a linear trap with a static magnetic-field gradient
realizes an effective spin model whose parameters derive entirely from the
axial confinement.  Given an axial potential and an ion species this module
computes equilibrium positions, the potential-energy Hessian, normal modes,
position-dependent qubit splittings, the spin-spin coupling matrix

    J_ij = (hbar/2) * (d omega/d x)_i * (d omega/d x)_j * (A^-1)_ij

and the effective spin-motion (Lamb-Dicke) couplings

    eta_jk = sqrt(hbar / (2 m nu_k)) * (slope / nu_k) * dB/dx * S_jk.

Unit conventions: positions in metres, energies in joules, and every
frequency stored internally as angular (rad/s).  Exported/printed
frequencies are linear and labelled "/2pi", matching the usual lab
convention.

All functions here are pure: they never mutate their inputs and hold no
module state, so they are safe to call concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants as const
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq

from .errors import ConfigError, NumericalError, UnstableConfigurationError

# Coulomb prefactor e^2/(4 pi eps0) is assembled per-species from its charge.
_K_COULOMB = 1.0 / (4.0 * np.pi * const.epsilon_0)

#: Default magnetic slope: one Bohr magneton per hbar, in (rad/s)/T.
#: Equivalent to 2*pi * 13.996 GHz/T, the splitting slope of a g = 1 qubit.
MAGNETIC_SLOPE_DEFAULT = const.physical_constants["Bohr magneton"][0] / const.hbar


class NonEquilibriumWarning(UserWarning):
    """Hessian requested at positions that are not an energy minimum."""


@dataclass(frozen=True)
class IonSpecies:
    """Ion mass, charge and field-to-splitting conversion slope.

    ``magnetic_slope`` converts a magnetic field (T) into a qubit
    angular-frequency shift (rad/s); the default corresponds to a magnetic
    moment of one Bohr magneton (g = 1).
    """

    mass: float  # kg
    charge: float  # C
    magnetic_slope: float = MAGNETIC_SLOPE_DEFAULT  # (rad/s)/T

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigError("ion mass must be positive")
        if self.charge <= 0:
            raise ConfigError("ion charge must be positive")

    @property
    def coulomb(self) -> float:
        """Pair energy prefactor q^2/(4 pi eps0), in J*m."""
        return _K_COULOMB * self.charge**2


def ytterbium_171() -> IonSpecies:
    """The default species: singly charged ytterbium-171."""
    return IonSpecies(mass=170.936323 * const.u, charge=const.e)


# ---------------------------------------------------------------------------
# Axial potentials
# ---------------------------------------------------------------------------


class AxialPotential:
    """One-dimensional confining potential along the trap axis.

    Concrete potentials implement ``energy``/``gradient``/``curvature``
    (vectorized over positions, [J], [J/m], [J/m^2]) and ``rescaled``,
    which multiplies the whole potential by a positive factor (used by
    :func:`calibrate` to pin the lowest normal mode).
    """

    def energy(self, x, mass: float):
        raise NotImplementedError

    def gradient(self, x, mass: float):
        raise NotImplementedError

    def curvature(self, x, mass: float):
        raise NotImplementedError

    def rescaled(self, factor: float) -> "AxialPotential":
        raise NotImplementedError


@dataclass(frozen=True)
class HarmonicPotential(AxialPotential):
    """Single harmonic well, phi(x) = (1/2) m omega^2 x^2."""

    omega: float  # angular trap frequency, rad/s

    def __post_init__(self):
        if self.omega <= 0:
            raise ConfigError("harmonic trap frequency must be positive")

    def energy(self, x, mass):
        return 0.5 * mass * self.omega**2 * np.asarray(x) ** 2

    def gradient(self, x, mass):
        return mass * self.omega**2 * np.asarray(x)

    def curvature(self, x, mass):
        return mass * self.omega**2 * np.ones_like(np.asarray(x, dtype=float))

    def rescaled(self, factor):
        return HarmonicPotential(omega=self.omega * np.sqrt(factor))


@dataclass(frozen=True)
class TripleWellPotential(AxialPotential):
    """Reflection-symmetric sixth-order potential with three wells.

    Three parameters fix the entire shape: the outer-well separation
    ``x_o`` from the centre, and the local curvatures at the central and
    outer minima expressed as trap frequencies ``omega_c`` and ``omega_o``:

        phi(x) = m [ (2 wc^2 + wo^2)/(12 xo^4) x^6
                     - (4 wc^2 + wo^2)/(8 xo^2) x^4 + (wc^2/2) x^2 ]

    By construction phi''(0) = m wc^2 and phi''(+-xo) = m wo^2.  For small
    ``omega_o`` the outer wells are extremely shallow; see
    :func:`resolvable_minima` for a depth-aware count.
    """

    x_o: float  # outer-well position, m
    omega_c: float  # central curvature frequency, rad/s
    omega_o: float  # outer curvature frequency, rad/s

    def __post_init__(self):
        if self.x_o <= 0:
            raise ConfigError("well separation x_o must be positive")
        if self.omega_c <= 0 or self.omega_o <= 0:
            raise ConfigError("triple-well curvature frequencies must be positive")

    def _coeffs(self, mass):
        wc2 = self.omega_c**2
        wo2 = self.omega_o**2
        c6 = mass * (2 * wc2 + wo2) / (12 * self.x_o**4)
        c4 = -mass * (4 * wc2 + wo2) / (8 * self.x_o**2)
        c2 = mass * wc2 / 2
        return c2, c4, c6

    def energy(self, x, mass):
        c2, c4, c6 = self._coeffs(mass)
        x2 = np.asarray(x) ** 2
        return ((c6 * x2 + c4) * x2 + c2) * x2

    def gradient(self, x, mass):
        c2, c4, c6 = self._coeffs(mass)
        x = np.asarray(x)
        x2 = x**2
        return ((6 * c6 * x2 + 4 * c4) * x2 + 2 * c2) * x

    def curvature(self, x, mass):
        c2, c4, c6 = self._coeffs(mass)
        x2 = np.asarray(x) ** 2
        return (30 * c6 * x2 + 12 * c4) * x2 + 2 * c2

    def rescaled(self, factor):
        s = np.sqrt(factor)
        return replace(self, omega_c=self.omega_c * s, omega_o=self.omega_o * s)


@dataclass(frozen=True)
class PolynomialPotential(AxialPotential):
    """General even polynomial phi(x) = c2 x^2 + c4 x^4 + c6 x^6.

    Coefficients carry absolute energy units (J/m^2, J/m^4, J/m^6) and do
    not scale with the ion mass.  The highest nonzero coefficient must be
    positive so the potential confines at +-infinity.
    """

    c2: float
    c4: float = 0.0
    c6: float = 0.0

    def __post_init__(self):
        leading = next((c for c in (self.c6, self.c4, self.c2) if c != 0.0), 0.0)
        if leading <= 0:
            raise ConfigError("highest nonzero coefficient must be positive (confining)")

    def energy(self, x, mass):
        x2 = np.asarray(x) ** 2
        return ((self.c6 * x2 + self.c4) * x2 + self.c2) * x2

    def gradient(self, x, mass):
        x = np.asarray(x)
        x2 = x**2
        return ((6 * self.c6 * x2 + 4 * self.c4) * x2 + 2 * self.c2) * x

    def curvature(self, x, mass):
        x2 = np.asarray(x) ** 2
        return (30 * self.c6 * x2 + 12 * self.c4) * x2 + 2 * self.c2

    def rescaled(self, factor):
        return PolynomialPotential(self.c2 * factor, self.c4 * factor, self.c6 * factor)


# ---------------------------------------------------------------------------
# Energy, equilibrium, Hessian
# ---------------------------------------------------------------------------


def total_energy(positions, potential: AxialPotential, species: IonSpecies) -> float:
    """Potential plus mutual Coulomb energy of the chain, in joules.

    Raises :class:`NumericalError` if two positions coincide (divergent
    Coulomb energy).
    """
    x = np.asarray(positions, dtype=float)
    e_trap = float(np.sum(potential.energy(x, species.mass)))
    if x.size < 2:
        return e_trap
    diff = x[:, None] - x[None, :]
    iu = np.triu_indices(x.size, k=1)
    sep = np.abs(diff[iu])
    if np.any(sep == 0.0):
        raise NumericalError("coincident ion positions: Coulomb energy diverges")
    return e_trap + float(species.coulomb * np.sum(1.0 / sep))


def energy_gradient(positions, potential: AxialPotential, species: IonSpecies):
    """Analytic gradient of :func:`total_energy` with respect to positions."""
    x = np.asarray(positions, dtype=float)
    g = np.asarray(potential.gradient(x, species.mass), dtype=float).copy()
    if x.size < 2:
        return g
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, np.inf)
    # d/dx_i of k/|x_i - x_j| = -k * sign(x_i - x_j) / (x_i - x_j)^2
    g -= species.coulomb * np.sum(np.sign(diff) / diff**2, axis=1)
    return g


def hessian(positions, potential: AxialPotential, species: IonSpecies, *,
            check_equilibrium: bool = True):
    """Analytic Hessian A of the total potential energy, shape (N, N).

    The trap contributes only on the diagonal; the Coulomb term adds
    2*q^2/(4 pi eps0 |x_i - x_j|^3) on the diagonal and its negative
    off-diagonal.  The Hessian is well defined anywhere, but when the
    supplied positions are not an equilibrium a
    :class:`NonEquilibriumWarning` is emitted (couplings derived from such
    a Hessian mix in linear-response artefacts).
    """
    x = np.asarray(positions, dtype=float)
    n = x.size
    a = np.zeros((n, n))
    np.fill_diagonal(a, potential.curvature(x, species.mass))
    if n > 1:
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, np.inf)
        pair = 2.0 * species.coulomb / np.abs(diff) ** 3
        a -= pair
        np.fill_diagonal(a, np.diag(a) + np.sum(pair, axis=1))
    if check_equilibrium:
        g = energy_gradient(x, potential, species)
        if np.linalg.norm(g, np.inf) > 1e-6 * _force_scale(x, species):
            warnings.warn(
                "Hessian evaluated away from equilibrium", NonEquilibriumWarning,
                stacklevel=2,
            )
    return a


def _force_scale(x, species: IonSpecies) -> float:
    """Typical force magnitude used for relative convergence tests."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        span = max(abs(float(x[0])), 1e-6) if x.size else 1e-6
        return species.coulomb / span**2
    dbar = float(np.mean(np.diff(np.sort(x))))
    return species.coulomb / dbar**2


def _default_guess(potential: AxialPotential, species: IonSpecies, n: int):
    """Equally spaced starting positions spanning a rough chain length."""
    if n == 1:
        return np.array([0.0])
    if isinstance(potential, HarmonicPotential):
        ell = (species.coulomb / (species.mass * potential.omega**2)) ** (1.0 / 3.0)
        half = ell * n ** (2.0 / 3.0)
        return np.linspace(-half, half, n)
    if isinstance(potential, TripleWellPotential):
        half = 1.1 * potential.x_o
        return np.linspace(-half, half, n)
    # Generic even potential: grow the span until the trap wall at the edge
    # dominates the Coulomb pressure of n charges.
    half = 1e-9
    mass = species.mass
    for _ in range(200):
        wall = float(potential.energy(half, mass))
        if wall > n * n * species.coulomb / (2 * half):
            break
        half *= 1.5
    else:
        raise NumericalError("could not bracket the chain extent; potential too flat")
    return np.linspace(-half, half, n)


def find_equilibrium(potential: AxialPotential, species: IonSpecies, n_ions: int,
                     guess=None, *, gradient_rtol: float = 1e-10,
                     position_atol: float = 1e-12, max_iterations: int = 500):
    """Locate an equilibrium configuration of ``n_ions`` ions, sorted ascending.

    Damped Newton descent on the total energy with analytic gradient and
    Hessian; when the Hessian is not positive definite the step falls back
    to steepest descent.  Backtracking keeps the energy decreasing and the
    ion ordering intact.

    Multi-well potentials admit several local minima (ions distributed
    differently over the wells); the minimum returned is the one reached
    from ``guess``.  Permuting ion labels leaves the energy unchanged, so
    positions are canonicalized to ascending order.
    """
    if n_ions < 1:
        raise ConfigError("need at least one ion")
    if guess is None:
        x = _default_guess(potential, species, n_ions)
    else:
        x = np.sort(np.asarray(guess, dtype=float))
        if x.size != n_ions:
            raise ConfigError(f"guess has {x.size} entries, expected {n_ions}")
        if n_ions > 1 and np.any(np.diff(x) == 0.0):
            raise ConfigError("guess entries must be distinct")

    energy = total_energy(x, potential, species)
    for _ in range(max_iterations):
        g = energy_gradient(x, potential, species)
        if np.linalg.norm(g, np.inf) <= gradient_rtol * _force_scale(x, species):
            return x
        a = hessian(x, potential, species, check_equilibrium=False)
        try:
            step = cho_solve(cho_factor(a, lower=True), -g)
        except LinAlgError:
            step = None
        if step is None or np.dot(step, g) >= 0.0:
            # Indefinite Hessian: steepest descent, scaled to the local
            # curvature so the first trial step is O(position change).
            step = -g / max(np.linalg.norm(a, np.inf), 1e-300)
        t = 1.0
        directional = np.dot(g, step)
        for _ in range(60):
            x_new = x + t * step
            if n_ions > 1 and np.any(np.diff(x_new) <= 0.0):
                t *= 0.5
                continue
            try:
                e_new = total_energy(x_new, potential, species)
            except NumericalError:
                t *= 0.5
                continue
            if e_new <= energy + 1e-4 * t * directional:
                break
            t *= 0.5
        else:
            raise NumericalError("line search failed; no descent step found")
        moved = np.linalg.norm(t * step, np.inf)
        x, energy = x_new, e_new
        if moved < position_atol:
            g = energy_gradient(x, potential, species)
            if np.linalg.norm(g, np.inf) <= gradient_rtol * _force_scale(x, species):
                return x
    raise NumericalError(f"equilibrium search did not converge in {max_iterations} iterations")


# ---------------------------------------------------------------------------
# Modes, splittings, couplings
# ---------------------------------------------------------------------------


def normal_modes(a, species: IonSpecies):
    """Diagonalize the Hessian: returns (nu, S) with S^T A S = diag(m nu^2).

    Mode frequencies ``nu`` ascend; columns of ``S`` are orthonormal with
    the sign convention that the largest-magnitude component of each column
    is positive.  Raises :class:`UnstableConfigurationError` when the
    Hessian has a non-positive eigenvalue.
    """
    a = np.asarray(a, dtype=float)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(np.abs(a).max(), 1e-300)):
        raise ConfigError("Hessian must be symmetric")
    w, s = np.linalg.eigh(a)
    if w[0] <= 0.0:
        raise UnstableConfigurationError(
            f"non-positive Hessian eigenvalue {w[0]:.3e}: unstable configuration")
    nu = np.sqrt(w / species.mass)
    # eigh returns ascending eigenvalues already; fix column signs.
    for k in range(s.shape[1]):
        lead = np.argmax(np.abs(s[:, k]))
        if s[lead, k] < 0.0:
            s[:, k] = -s[:, k]
    return nu, s


def qubit_splittings(positions, gradient: float, species: IonSpecies):
    """Qubit angular-frequency shifts slope * dB/dx * x_i, in rad/s.

    The field is modelled as linear in position with zero offset, so the
    splitting pattern mirrors the equilibrium positions.
    """
    return species.magnetic_slope * gradient * np.asarray(positions, dtype=float)


def coupling_matrix(positions, a, gradient: float, species: IonSpecies):
    """Spin-spin coupling matrix J (rad/s) from the inverse Hessian.

    J_ij = (hbar/2) (d omega/dx)_i (d omega/dx)_j (A^-1)_ij with a uniform
    splitting slope, hence J scales quadratically with the gradient.  The
    diagonal is zeroed by convention: self-couplings only shift single-spin
    energies, which the rotating-frame detuning absorbs.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if np.asarray(positions).size != n:
        raise ConfigError("positions and Hessian sizes differ")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError("Hessian is singular; couplings undefined")
    slope_x = species.magnetic_slope * gradient  # d omega / d x, uniform
    j = 0.5 * const.hbar * slope_x**2 * np.linalg.inv(a)
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return j


def lamb_dicke(nu, s, gradient: float, species: IonSpecies):
    """Effective spin-motion coupling matrix eta, dimensionless.

    eta_jk = sqrt(hbar/(2 m nu_k)) * (slope * dB/dx / nu_k) * S_jk, so each
    mode column scales as nu_k^(-3/2) and linearly with the gradient.
    """
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0.0):
        raise ConfigError("mode frequencies must be positive")
    zpf = np.sqrt(const.hbar / (2.0 * species.mass * nu))
    factor = zpf * species.magnetic_slope * gradient / nu
    return np.asarray(s, dtype=float) * factor[None, :]


@dataclass(frozen=True)
class SidebandCheck:
    """Per-mode sideband excitation diagnostic max_j eta_jk^2 (nbar_k + 1)."""

    values: np.ndarray
    threshold: float

    @property
    def per_mode_negligible(self) -> np.ndarray:
        return self.values < self.threshold

    @property
    def negligible(self) -> bool:
        return bool(np.all(self.per_mode_negligible))


def sideband_negligibility(eta, nbar, threshold: float = 0.1) -> SidebandCheck:
    """Check that motional sideband transitions stay negligible.

    The spin-motion coupling is irrelevant while eta^2 (nbar + 1) << 1 for
    every mode; ``threshold`` sets the cut used for the boolean verdict.
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    nbar = np.asarray(nbar, dtype=float)
    if np.any(nbar < 0):
        raise ConfigError("mode occupations must be non-negative")
    values = np.max(eta**2, axis=0) * (nbar + 1.0)
    return SidebandCheck(values=values, threshold=threshold)


# ---------------------------------------------------------------------------
# Chain solution and calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSolution:
    """Complete static solution for one chain and gradient."""

    positions: np.ndarray  # m, ascending
    hessian: np.ndarray  # J/m^2
    mode_frequencies: np.ndarray  # rad/s, ascending
    mode_matrix: np.ndarray  # orthogonal, columns are modes
    splittings: np.ndarray  # rad/s
    couplings: np.ndarray  # rad/s, symmetric, zero diagonal
    lamb_dicke: np.ndarray  # dimensionless
    gradient: float  # T/m

    @property
    def n_ions(self) -> int:
        return self.positions.size


def solve_chain(potential: AxialPotential, species: IonSpecies, n_ions: int,
                gradient: float, guess=None) -> ChainSolution:
    """Equilibrium, modes, splittings, couplings and eta for one chain."""
    x = find_equilibrium(potential, species, n_ions, guess)
    a = hessian(x, potential, species, check_equilibrium=False)
    nu, s = normal_modes(a, species)
    return ChainSolution(
        positions=x,
        hessian=a,
        mode_frequencies=nu,
        mode_matrix=s,
        splittings=qubit_splittings(x, gradient, species),
        couplings=coupling_matrix(x, a, gradient, species),
        lamb_dicke=lamb_dicke(nu, s, gradient, species),
        gradient=gradient,
    )


def calibrate(potential: AxialPotential, species: IonSpecies, n_ions: int,
              nu0_target: float, eta_max_target: float):
    """Rescale the potential and pick the gradient to hit two targets.

    A uniform potential rescaling pins the lowest normal mode at
    ``nu0_target`` (rad/s); the magnetic gradient is then fixed so the
    largest |eta| equals ``eta_max_target``.  Returns the rescaled
    potential and the gradient in T/m.
    """
    if nu0_target <= 0 or eta_max_target <= 0:
        raise ConfigError("calibration targets must be positive")

    def lowest_mode(scale):
        pot = potential.rescaled(scale)
        x = find_equilibrium(pot, species, n_ions)
        nu, _ = normal_modes(hessian(x, pot, species, check_equilibrium=False), species)
        return nu[0]

    nu_ref = lowest_mode(1.0)
    s0 = (nu0_target / nu_ref) ** 2  # exact for a purely harmonic trap
    lo, hi = 0.5 * s0, 2.0 * s0
    f_lo = lowest_mode(lo) - nu0_target
    f_hi = lowest_mode(hi) - nu0_target
    for _ in range(60):
        if f_lo * f_hi <= 0.0:
            break
        if abs(f_lo) < abs(f_hi):
            lo *= 0.5
            f_lo = lowest_mode(lo) - nu0_target
        else:
            hi *= 2.0
            f_hi = lowest_mode(hi) - nu0_target
    else:
        raise NumericalError("calibration could not bracket the mode target")
    scale = brentq(lambda s: lowest_mode(s) - nu0_target, lo, hi, rtol=1e-14)

    pot = potential.rescaled(scale)
    x = find_equilibrium(pot, species, n_ions)
    nu, s = normal_modes(hessian(x, pot, species, check_equilibrium=False), species)
    eta_unit = lamb_dicke(nu, s, 1.0, species)  # eta is linear in the gradient
    gradient = eta_max_target / float(np.max(np.abs(eta_unit)))
    return pot, gradient


# ---------------------------------------------------------------------------
# Potential landscape diagnostics
# ---------------------------------------------------------------------------


def stationary_points(potential: AxialPotential, mass: float, halfwidth: float,
                      samples: int = 20001):
    """All minima and maxima of phi in [-halfwidth, halfwidth].

    Sign changes of the analytic derivative on a dense grid are refined by
    bisection.  Returns ``(minima, maxima)`` as arrays of abscissae.
    """
    xs = np.linspace(-halfwidth, halfwidth, samples)
    g = np.asarray(potential.gradient(xs, mass), dtype=float)
    sign = np.sign(g)
    roots = [xs[i] for i in range(xs.size) if sign[i] == 0.0]
    for i in range(xs.size - 1):
        if sign[i] * sign[i + 1] < 0.0:
            roots.append(brentq(lambda x: float(potential.gradient(x, mass)),
                                xs[i], xs[i + 1]))
    spacing = xs[1] - xs[0]
    minima, maxima = [], []
    for root in sorted(roots):
        if minima and abs(root - minima[-1]) < 0.5 * spacing:
            continue
        if maxima and abs(root - maxima[-1]) < 0.5 * spacing:
            continue
        curv = float(potential.curvature(root, mass))
        if curv > 0.0:
            minima.append(root)
        elif curv < 0.0:
            maxima.append(root)
    return np.asarray(minima), np.asarray(maxima)


def resolvable_minima(potential: AxialPotential, mass: float, halfwidth: float,
                      samples: int = 20001):
    """Minima deep enough to hold at least one local motional quantum.

    A well of depth smaller than hbar * omega_local (with
    omega_local = sqrt(phi''/m) the local curvature frequency) cannot trap
    even the zero-point motion, so it does not count as a resolvable well.
    This reproduces the visual well count of shallow multi-well potentials,
    whereas :func:`stationary_points` reports every analytic minimum no
    matter how faint.
    """
    minima, maxima = stationary_points(potential, mass, halfwidth, samples)
    kept = []
    for xm in minima:
        e_min = float(potential.energy(xm, mass))
        left = maxima[maxima < xm]
        right = maxima[maxima > xm]
        barriers = []
        if left.size:
            barriers.append(float(potential.energy(left.max(), mass)) - e_min)
        if right.size:
            barriers.append(float(potential.energy(right.min(), mass)) - e_min)
        if not barriers:
            kept.append(xm)  # sole well: confined by the outer walls
            continue
        depth = min(barriers)
        omega_local = np.sqrt(max(float(potential.curvature(xm, mass)), 0.0) / mass)
        if depth >= const.hbar * omega_local:
            kept.append(xm)
    return np.asarray(kept)
