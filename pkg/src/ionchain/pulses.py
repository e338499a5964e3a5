"""Stroboscopic microwave pulse sequences and adiabatic ramps.

One drive cycle consists of 2N+2 piecewise-constant steps: a free evolution
of length dt1 under the z-Ising Hamiltonian, a train of N pi/2 pulses
(Rabi frequency -Omega, one spin at a time, Omega * dt_pulse = pi/4), a
second free evolution of length dt2 = alpha * dt1, and a reversed train of
N pi/2 pulses at +Omega.  The two trains sandwich the middle free evolution
between global +-pi/2 rotations about y, so one cycle realizes

    U_cycle = exp(-i H^(x) dt2) * exp(-i H^(z) dt1)

and repeating cycles Trotter-approximates exp(-i beta (H^(z) + alpha H^(x)) t)
with duty factor beta = dt1 / ((1 + alpha) dt1 + 2 N dt_pulse).

Slowly raising alpha from 0 to 1 while lowering the detuning b from b0 to 0
(both exponentially at rate r, frozen per cycle) drags the spins from the
trivially prepared polarized ground state into the ground state of the XX
model, which for suitably weak end couplings is long-distance entangled.

Two drive models are available: ``resonant`` keeps only the resonantly
driven spin's transverse term (time-independent steps), ``full`` retains
every spin's off-resonant drive with its rotating-frame phases (the pulses
are then sub-stepped in time).  Within the resonant model,
``ideal_pulses=True`` additionally drops the detuning and coupling terms
during the pulses, making each cycle factorize exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from math import ceil, exp, pi

import numpy as np
from scipy.integrate import solve_ivp

from . import spins
from .errors import ConfigError, NumericalError


class FrameSeparationWarning(UserWarning):
    """The Rabi frequency is not small against the spin-frequency spacing."""


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PulseStep:
    """One piecewise-constant drive interval.

    ``rabi == 0`` marks free evolution; pulses carry the signed Rabi
    frequency, the driven spin, the common detuning and the drive phase.
    """

    duration: float  # s
    rabi: float = 0.0  # rad/s, signed; 0 = drive off
    target: int | None = None  # 0-based spin index
    detuning: float = 0.0  # rad/s
    phase: float = 0.0  # rad, drive phase (frame correction in full mode)

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ConfigError("step duration must be positive")
        if self.rabi != 0.0 and self.target is None:
            raise ConfigError("a pulse step needs a target spin")


@dataclass(frozen=True)
class PulseSequence:
    """An ordered list of steps forming one drive cycle, plus its knobs."""

    steps: tuple
    n_spins: int
    b: float
    alpha: float
    dt1: float
    dt2: float
    pulse_time: float
    rabi: float

    @property
    def cycle_time(self) -> float:
        """dt1 + dt2 + 2 N dt_pulse (the 2N pulses included)."""
        return self.dt1 + self.dt2 + 2 * self.n_spins * self.pulse_time

    @property
    def beta(self) -> float:
        return self.dt1 / ((1.0 + self.alpha) * self.dt1
                           + 2 * self.n_spins * self.pulse_time)

    def validate(self):
        """Check the free/train/free/train structure and the pi/4 pulse area."""
        n = self.n_spins
        expected = 2 * n + 2 if self.dt2 > 0.0 else 2 * n + 1
        if len(self.steps) != expected:
            raise ConfigError(f"expected {expected} steps, found {len(self.steps)}")
        if abs(self.rabi * self.pulse_time - pi / 4) > 1e-12:
            raise ConfigError("pulse area is not pi/4")
        down = self.steps[1:1 + n]
        up = self.steps[-n:]
        for step in down:
            if step.rabi != -self.rabi:
                raise ConfigError("first train must run at -rabi")
        for step in up:
            if step.rabi != self.rabi:
                raise ConfigError("second train must run at +rabi")
        if sorted(s.target for s in down) != list(range(n)):
            raise ConfigError("first train must address every spin once")
        if sorted(s.target for s in up) != list(range(n)):
            raise ConfigError("second train must address every spin once")


@dataclass(frozen=True)
class Schedule:
    """Exponential adiabatic ramp, frozen stepwise at each cycle start.

    alpha(t) = 1 - exp(-r t) raises the x-interactions, b(t) = b0 exp(-r t)
    lowers the effective field; ``r`` is the ramp rate.  The pi/2-pulse
    Rabi frequency is fixed by the pulse length, rabi = pi / (4 dt_pulse).
    """

    b0: float  # rad/s
    r: float  # 1/s ramp rate
    dt1: float  # s
    pulse_time: float  # s
    n_cycles: int

    def __post_init__(self):
        if self.b0 <= 0.0 or self.dt1 <= 0.0 or self.pulse_time <= 0.0:
            raise ConfigError("schedule parameters must be positive")
        if self.r < 0.0:
            raise ConfigError("ramp rate must be non-negative")
        if self.n_cycles < 1:
            raise ConfigError("need at least one cycle")

    @property
    def rabi(self) -> float:
        return pi / (4.0 * self.pulse_time)

    def alpha(self, t: float) -> float:
        return 1.0 - exp(-self.r * t)

    def field(self, t: float) -> float:
        return self.b0 * exp(-self.r * t)

    def beta(self, alpha: float, n_spins: int) -> float:
        return self.dt1 / ((1.0 + alpha) * self.dt1
                           + 2 * n_spins * self.pulse_time)

    def cycle_start_times(self, n_spins: int) -> np.ndarray:
        """Times of the n_cycles + 1 cycle boundaries (cycle length varies
        with the frozen alpha of each cycle)."""
        times = np.empty(self.n_cycles + 1)
        t = 0.0
        for n in range(self.n_cycles):
            times[n] = t
            alpha_n = self.alpha(t)
            t += (1.0 + alpha_n) * self.dt1 + 2 * n_spins * self.pulse_time
        times[self.n_cycles] = t
        return times

    @classmethod
    def for_duration(cls, b0, r, dt1, pulse_time, duration, n_spins) -> "Schedule":
        """Enough cycles for the ramp to cover at least ``duration`` seconds."""
        if duration <= 0.0:
            raise ConfigError("duration must be positive")
        t, n = 0.0, 0
        probe = cls(b0=b0, r=r, dt1=dt1, pulse_time=pulse_time, n_cycles=1)
        while t < duration:
            t += (1.0 + probe.alpha(t)) * dt1 + 2 * n_spins * pulse_time
            n += 1
        return cls(b0=b0, r=r, dt1=dt1, pulse_time=pulse_time, n_cycles=n)


@dataclass
class DriveContext:
    """Spin resonances, couplings and the drive model for a run.

    ``mode`` selects the step Hamiltonians: ``resonant`` keeps only the
    driven spin's transverse term; ``full`` keeps every spin's off-resonant
    drive with rotating-frame phases (requires distinct resonance
    frequencies ``omega``).  ``ideal_pulses`` (resonant only) drops the
    detuning/coupling terms during pulses.
    """

    couplings: np.ndarray  # rad/s
    omega: np.ndarray | None = None  # spin resonance frequencies, rad/s
    mode: str = "resonant"
    ideal_pulses: bool = False

    def __post_init__(self):
        self.couplings = spins.validate_couplings(self.couplings)
        if self.mode not in ("resonant", "full"):
            raise ConfigError("mode must be 'resonant' or 'full'")
        if self.omega is not None:
            self.omega = np.asarray(self.omega, dtype=float)
            if self.omega.size != self.n_spins:
                raise ConfigError("omega length does not match the coupling matrix")
        if self.mode == "full":
            if self.omega is None:
                raise ConfigError("full mode needs the spin resonance frequencies")
            diffs = np.abs(self.omega[:, None] - self.omega[None, :])
            if np.any(diffs[~np.eye(self.n_spins, dtype=bool)] == 0.0):
                raise ConfigError("full mode needs distinct resonance frequencies")

    @property
    def n_spins(self) -> int:
        return self.couplings.shape[0]

    @cached_property
    def _parts(self):
        n = self.n_spins
        return {
            "sz": spins.total_spin("z", n),
            "vz": spins.coupling_sum("z", self.couplings),
            "sy_site": [spins.site_operator("y", j, n) for j in range(n)],
            "sx_site": [spins.site_operator("x", j, n) for j in range(n)],
        }

    def min_distinct_detuning(self) -> float:
        diffs = np.abs(self.omega[:, None] - self.omega[None, :])
        return float(diffs[~np.eye(self.n_spins, dtype=bool)].min())

    def max_detuning(self) -> float:
        return float(np.abs(self.omega[:, None] - self.omega[None, :]).max())


@dataclass
class Trajectory:
    """States sampled at cycle boundaries plus the frozen knobs per cycle."""

    times: np.ndarray
    states: list  # state vectors (pure) or density matrices (mixed)
    alphas: np.ndarray
    bs: np.ndarray
    betas: np.ndarray
    gamma: float = 0.0
    mode: str = "resonant"

    @property
    def is_density(self) -> bool:
        return np.asarray(self.states[0]).ndim == 2

    @property
    def final_state(self):
        return self.states[-1]


# ---------------------------------------------------------------------------
# Sequence construction and step Hamiltonians
# ---------------------------------------------------------------------------


def build_sequence(n_spins: int, b: float, alpha: float, dt1: float,
                   pulse_time: float, drive_phase: float = 0.0) -> PulseSequence:
    """The 2N+2-step cycle: free(dt1), N pulses at -rabi (spins N..1),
    free(dt2 = alpha * dt1), N pulses at +rabi (spins 1..N).

    The pulse area is pi/4 (rabi = pi / (4 pulse_time)), so each pulse is a
    pi/2 rotation about y and the sign-reversed trains conjugate the middle
    free evolution from the z-axis to the x-axis.  For alpha = 0 the
    zero-length second free step is omitted.
    """
    if alpha < 0.0:
        raise ConfigError("alpha must be non-negative")
    if dt1 <= 0.0 or pulse_time <= 0.0:
        raise ConfigError("dt1 and pulse_time must be positive")
    rabi = pi / (4.0 * pulse_time)
    dt2 = alpha * dt1
    steps = [PulseStep(duration=dt1, detuning=b)]
    for j in reversed(range(n_spins)):
        steps.append(PulseStep(duration=pulse_time, rabi=-rabi, target=j,
                               detuning=b, phase=drive_phase))
    if dt2 > 0.0:
        steps.append(PulseStep(duration=dt2, detuning=b))
    for j in range(n_spins):
        steps.append(PulseStep(duration=pulse_time, rabi=rabi, target=j,
                               detuning=b, phase=drive_phase))
    return PulseSequence(steps=tuple(steps), n_spins=n_spins, b=b, alpha=alpha,
                         dt1=dt1, dt2=dt2, pulse_time=pulse_time, rabi=rabi)


def _free_hamiltonian(ctx: DriveContext, b: float) -> np.ndarray:
    parts = ctx._parts
    return 0.5 * b * parts["sz"] - parts["vz"]


def step_hamiltonian(step: PulseStep, ctx: DriveContext, t: float = 0.0) -> np.ndarray:
    """The Hermitian generator of one step, in rad/s.

    Resonant mode returns a time-independent matrix: the z-Ising part plus
    rabi * sigma_y on the driven spin (only rabi * sigma_y when
    ``ctx.ideal_pulses``).  Full mode evaluates, at absolute time ``t``,
    every spin's drive term rotating at its detuning from the driven spin,
    rabi * [cos(theta_j) sigma_j^y - sin(theta_j) sigma_j^x] with
    theta_j = (omega_target - omega_j) t + phase.
    """
    if step.rabi == 0.0:
        return _free_hamiltonian(ctx, step.detuning)
    parts = ctx._parts
    if ctx.mode == "resonant":
        drive = step.rabi * parts["sy_site"][step.target]
        if ctx.ideal_pulses:
            return drive
        return _free_hamiltonian(ctx, step.detuning) + drive
    h = _free_hamiltonian(ctx, step.detuning).astype(complex)
    omega = ctx.omega
    for j in range(ctx.n_spins):
        theta = (omega[step.target] - omega[j]) * t + step.phase
        h = h + step.rabi * (np.cos(theta) * parts["sy_site"][j]
                             - np.sin(theta) * parts["sx_site"][j])
    return h


def _propagate(state, h, dt):
    """exp(-i h dt) applied to a state vector (h Hermitian, rad/s units)."""
    diag = np.diagonal(h)
    if np.count_nonzero(h - np.diag(diag)) == 0:
        return np.exp(-1j * diag.real * dt) * state
    w, v = np.linalg.eigh(h)
    return v @ (np.exp(-1j * w * dt) * (v.conj().T @ state))


def full_mode_slices(step: PulseStep, ctx: DriveContext) -> int:
    """Sub-steps for a time-dependent pulse: slices no longer than
    1 / (50 max|Delta|), exponential-midpoint rule per slice."""
    if step.rabi == 0.0:
        return 1
    dmax = ctx.max_detuning()
    if dmax == 0.0:
        return 1
    return max(1, ceil(step.duration * 50.0 * dmax))


def evolve_pure(state, sequence: PulseSequence, ctx: DriveContext,
                start_time: float = 0.0) -> np.ndarray:
    """Apply one pulse sequence to a normalized state vector.

    Resonant mode multiplies the exact step propagators
    exp(-i H_m duration_m) in order.  Full mode additionally sub-steps each
    pulse with midpoint Hamiltonians to resolve the rotating drive phases;
    ``start_time`` anchors those phases to absolute time.
    """
    psi = np.asarray(state, dtype=complex)
    if psi.ndim != 1 or psi.size != 2**ctx.n_spins:
        raise ConfigError("state dimension does not match the context")
    t = start_time
    for step in sequence.steps:
        if ctx.mode == "resonant" or step.rabi == 0.0:
            psi = _propagate(psi, step_hamiltonian(step, ctx), step.duration)
            t += step.duration
            continue
        n_slices = full_mode_slices(step, ctx)
        dt = step.duration / n_slices
        for k in range(n_slices):
            h = step_hamiltonian(step, ctx, t + (k + 0.5) * dt)
            psi = _propagate(psi, h, dt)
        t += step.duration
    return psi


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


def initial_ground_state(schedule: Schedule, couplings) -> np.ndarray:
    """Exact ground state of the starting model (alpha = 0, b = b0).

    The starting Hamiltonian is diagonal, so this is the fully polarized
    product state; diagonalizing keeps any coupling-induced ordering exact.
    """
    j = spins.validate_couplings(couplings)
    params = spins.SpinModelParams(couplings=j, b=schedule.b0, alpha=0.0,
                                   beta=schedule.beta(0.0, j.shape[0]))
    _, psi = spins.ground_state(spins.build_effective(params))
    return psi


def adiabatic_run(ctx: DriveContext, schedule: Schedule, initial=None,
                  mode: str | None = None) -> Trajectory:
    """Run the stepwise adiabatic pulse protocol, sampling cycle boundaries.

    For cycle n starting at time t_n the knobs are frozen at
    alpha_n = alpha(t_n), b_n = b(t_n); the cycle length
    (1 + alpha_n) dt1 + 2 N dt_pulse therefore grows as alpha ramps up.
    Returns the state after each cycle together with (alpha, b, beta)
    evaluated at every boundary.  In full mode the drive phase of each
    cycle compensates the rotating-frame phase jump accumulated from the
    detuning changes of all earlier cycles.
    """
    if mode is not None:
        ctx = DriveContext(couplings=ctx.couplings, omega=ctx.omega, mode=mode,
                           ideal_pulses=ctx.ideal_pulses)
    n = ctx.n_spins
    if initial is None:
        psi = initial_ground_state(schedule, ctx.couplings)
    else:
        psi = np.asarray(initial, dtype=complex)
    if ctx.mode == "full" and schedule.rabi >= ctx.min_distinct_detuning():
        warnings.warn(
            "pulse Rabi frequency reaches the smallest spin-frequency spacing; "
            "the single-spin addressing assumption is violated",
            FrameSeparationWarning, stacklevel=2)

    times = [0.0]
    states = [psi]
    alphas = [schedule.alpha(0.0)]
    bs = [schedule.field(0.0)]
    t = 0.0
    frame_phase = 0.0
    b_prev = schedule.field(0.0)
    for _ in range(schedule.n_cycles):
        alpha_n = schedule.alpha(t)
        b_n = schedule.field(t)
        if ctx.mode == "full":
            # Rotating-frame phase jump (b_new - b_old) * t at the boundary;
            # the drive phase is set to its negative to cancel it.
            frame_phase += (b_n - b_prev) * t
            seq = build_sequence(n, b_n, alpha_n, schedule.dt1,
                                 schedule.pulse_time, drive_phase=-frame_phase)
        else:
            seq = build_sequence(n, b_n, alpha_n, schedule.dt1, schedule.pulse_time)
        psi = evolve_pure(psi, seq, ctx, start_time=t)
        t += seq.cycle_time
        b_prev = b_n
        times.append(t)
        states.append(psi)
        alphas.append(schedule.alpha(t))
        bs.append(schedule.field(t))
    alphas = np.asarray(alphas)
    betas = np.asarray([schedule.beta(a, n) for a in alphas])
    return Trajectory(times=np.asarray(times), states=states, alphas=alphas,
                      bs=np.asarray(bs), betas=betas, mode=ctx.mode)


class _EffectiveModel:
    """Cached operator parts of H_eff(t) for the continuous-schedule runs."""

    def __init__(self, schedule: Schedule, couplings):
        self.schedule = schedule
        self.couplings = spins.validate_couplings(couplings)
        self.n = self.couplings.shape[0]
        self.sz = spins.total_spin("z", self.n)
        self.sx = spins.total_spin("x", self.n)
        self.vz = spins.coupling_sum("z", self.couplings)
        self.vx = spins.coupling_sum("x", self.couplings)

    def knobs(self, t):
        s = self.schedule
        return s.alpha(t), s.field(t)

    def hamiltonian(self, t) -> np.ndarray:
        alpha, b = self.knobs(t)
        beta = self.schedule.beta(alpha, self.n)
        hz = 0.5 * b * self.sz - self.vz
        hx = 0.5 * b * self.sx - self.vx
        return beta * (hz + alpha * hx)

    def hamiltonian_derivative(self, t) -> np.ndarray:
        """Analytic dH/dt from the schedule derivatives."""
        s = self.schedule
        alpha, b = self.knobs(t)
        beta = s.beta(alpha, self.n)
        alpha_dot = s.r * exp(-s.r * t)
        b_dot = -s.r * b
        beta_dot = -beta**2 * alpha_dot  # d beta / d alpha = -beta^2 (dt1 cancels)
        hz = 0.5 * b * self.sz - self.vz
        hx = 0.5 * b * self.sx - self.vx
        return (beta_dot * (hz + alpha * hx)
                + beta * (0.5 * b_dot * self.sz + alpha_dot * hx
                          + alpha * 0.5 * b_dot * self.sx))


def effective_run(schedule: Schedule, couplings, initial=None, *,
                  rtol: float = 1e-9, atol: float = 1e-12) -> Trajectory:
    """Integrate the Schroedinger equation under the continuous effective
    Hamiltonian H_eff(alpha(t), b(t), beta(t)), sampled at the same cycle
    boundaries as the pulse protocol for direct comparison."""
    model = _EffectiveModel(schedule, couplings)
    if initial is None:
        psi0 = initial_ground_state(schedule, model.couplings)
    else:
        psi0 = np.asarray(initial, dtype=complex)
    times = schedule.cycle_start_times(model.n)

    def rhs(t, psi):
        return -1j * (model.hamiltonian(t) @ psi)

    sol = solve_ivp(rhs, (0.0, float(times[-1])), psi0, t_eval=times,
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(f"effective-model integration failed: {sol.message}")
    states = [sol.y[:, k] for k in range(sol.y.shape[1])]
    alphas = np.array([schedule.alpha(t) for t in times])
    bs = np.array([schedule.field(t) for t in times])
    betas = np.array([schedule.beta(a, model.n) for a in alphas])
    return Trajectory(times=times, states=states, alphas=alphas, bs=bs,
                      betas=betas, mode="effective")


# ---------------------------------------------------------------------------
# Error diagnostics
# ---------------------------------------------------------------------------


def zeeman_phase(rabi: float, delta: float) -> float:
    """Phase pi |rabi / (8 delta)| picked up by an off-resonant spin.

    A pulse of area pi/4 on one spin shifts every other spin by the
    dynamical (ac Zeeman) shift rabi^2 / (2 delta); over the pulse length
    this integrates to the returned phase.  ``delta = 0`` is the driven
    spin itself, which is rotated rather than shifted.
    """
    if delta == 0.0:
        raise ConfigError("zero detuning: the resonant spin has no Zeeman phase")
    return pi * abs(rabi / (8.0 * delta))


def adiabaticity_estimate(schedule: Schedule, couplings, t: float,
                          initial_level: int = 0) -> float:
    """Leakage estimate sum_k |<k| dH/dt |0> / (E_k - E_0)^2|^2 at time t.

    Much less than one along the ramp means the run stays adiabatic.
    Raises :class:`NumericalError` on a degenerate instantaneous spectrum.
    """
    model = _EffectiveModel(schedule, couplings)
    h = model.hamiltonian(t)
    hdot = model.hamiltonian_derivative(t)
    w, v = np.linalg.eigh(h)
    spread = max(float(w[-1] - w[0]), 1e-300)
    gaps = w - w[initial_level]
    others = np.abs(gaps) > spins.DEGENERACY_RTOL * spread
    others[initial_level] = False
    if np.count_nonzero(~others) > 1:
        raise NumericalError("degenerate instantaneous spectrum at the probe time")
    psi0 = v[:, initial_level]
    amplitudes = v[:, others].conj().T @ (hdot @ psi0)
    return float(np.sum(np.abs(amplitudes / gaps[others] ** 2) ** 2))
