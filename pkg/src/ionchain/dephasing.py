"""Density-matrix evolution with pure sigma_z dephasing.

Fluctuating spin resonance frequencies (white noise) dephase the spins at a
rate gamma; the ensemble obeys the master equation

    drho/dt = -i [H, rho] + (gamma/2) sum_j (sigma_j^z rho sigma_j^z - rho).

In the computational basis the dissipator is diagonal: the element rho_ab
decays at gamma times the number of spins on which the basis states a and b
disagree.  This makes an exact split-step integrator possible for the
piecewise-constant pulse protocol: each step interleaves the exact unitary
conjugation with exact element-wise damping (Strang order), which is exact
whenever the step Hamiltonian is diagonal and second-order accurate during
the short pulses, where it is sub-stepped.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from . import pulses, spins
from .errors import ConfigError, NumericalError, PositivityError

#: Density-matrix eigenvalues are allowed to dip this far below zero.
POSITIVITY_ATOL = 1e-7

#: Sub-steps per pulse in the split-step master integrator.
PULSE_SLICES = 8


def gamma_from_time(t_deph: float) -> float:
    """Dephasing rate 1/T for a given coherence time."""
    if t_deph <= 0.0:
        raise ConfigError("dephasing time must be positive")
    return 1.0 / t_deph


def dephasing_weights(n_spins: int) -> np.ndarray:
    """Matrix w_ab = number of spins on which basis states a, b differ.

    Element rho_ab decays as exp(-gamma w_ab t) under the bare dissipator.
    """
    dim = 2**n_spins
    a = np.arange(dim)
    xor = a[:, None] ^ a[None, :]
    w = np.zeros((dim, dim), dtype=float)
    while np.any(xor):
        w += xor & 1
        xor >>= 1
    return w


def lindblad_rhs(rho, h, gamma: float) -> np.ndarray:
    """-i[H, rho] + (gamma/2) sum_j (sigma_j^z rho sigma_j^z - rho).

    The result is traceless and maps Hermitian matrices to Hermitian
    matrices.  ``h`` is in rad/s (hbar = 1), ``gamma`` in 1/s.
    """
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape != h.shape or rho.ndim != 2:
        raise ConfigError("state and Hamiltonian dimensions differ")
    if gamma < 0.0:
        raise ConfigError("dephasing rate must be non-negative")
    n = int(round(np.log2(rho.shape[0])))
    out = -1j * (h @ rho - rho @ h)
    if gamma > 0.0:
        out = out - gamma * dephasing_weights(n) * rho
    return out


def _check_density(rho, where: str):
    trace_dev = abs(np.trace(rho) - 1.0)
    if trace_dev > 1e-8:
        raise NumericalError(f"trace drifted by {trace_dev:.2e} {where}")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.min() < -POSITIVITY_ATOL:
        raise PositivityError(
            f"density matrix eigenvalue {evals.min():.2e} below tolerance {where}")


def _split_step(rho, h, duration, gamma, weights, slices):
    """Strang split: half damping, exact unitary, half damping, per slice.

    Exact when [H, dissipator] = 0 (any diagonal H); otherwise the error is
    O(dt^3) per slice.  The damping factors act element-wise.
    """
    dt = duration / slices
    diag = np.diagonal(h)
    diagonal_h = np.count_nonzero(h - np.diag(diag)) == 0
    if diagonal_h:
        phases = np.exp(-1j * diag.real * duration)
        rho = (phases[:, None] * rho) * phases.conj()[None, :]
        if gamma > 0.0:
            rho = rho * np.exp(-gamma * duration * weights)
        return rho
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * dt)
    damp_half = np.exp(-0.5 * gamma * dt * weights) if gamma > 0.0 else None
    for _ in range(slices):
        if damp_half is not None:
            rho = rho * damp_half
        rho = (v * phases) @ (v.conj().T @ rho @ v) @ (v * phases).conj().T
        if damp_half is not None:
            rho = rho * damp_half
    return rho


def evolve_master(rho0, drive, ctx: pulses.DriveContext, gamma: float, *,
                  model: str = "pulse", rtol: float = 1e-9,
                  pulse_slices: int = PULSE_SLICES) -> pulses.Trajectory:
    """Evolve a density matrix through the protocol with dephasing.

    ``drive`` is either a :class:`~ionchain.pulses.Schedule` (full adiabatic
    run, states recorded at cycle boundaries) or a single
    :class:`~ionchain.pulses.PulseSequence` (one cycle).  ``model`` selects
    the piecewise-constant pulse Hamiltonians (``"pulse"``, resonant drive
    model) or the continuous effective Hamiltonian (``"effective"``,
    Schedule only).  Trace conservation and positivity are checked at every
    recorded sample.
    """
    rho = np.asarray(rho0, dtype=complex)
    dim = 2**ctx.n_spins
    if rho.shape != (dim, dim):
        raise ConfigError("initial density matrix does not match the context")
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise ConfigError("initial state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise ConfigError("initial state does not have unit trace")
    if gamma < 0.0:
        raise ConfigError("dephasing rate must be non-negative")
    if ctx.mode != "resonant":
        raise ConfigError("the master-equation integrator supports the resonant drive model")

    if isinstance(drive, pulses.PulseSequence):
        rho = _run_steps(rho, drive, ctx, gamma, pulse_slices)
        _check_density(rho, "after the sequence")
        beta = drive.beta
        return pulses.Trajectory(
            times=np.array([0.0, drive.cycle_time]), states=[np.asarray(rho0, dtype=complex), rho],
            alphas=np.array([drive.alpha] * 2), bs=np.array([drive.b] * 2),
            betas=np.array([beta] * 2), gamma=gamma, mode="master-pulse")
    if not isinstance(drive, pulses.Schedule):
        raise ConfigError("drive must be a Schedule or a PulseSequence")
    if model == "pulse":
        return _master_pulse_run(rho, drive, ctx, gamma, pulse_slices)
    if model == "effective":
        return _master_effective_run(rho, drive, ctx, gamma, rtol)
    raise ConfigError("model must be 'pulse' or 'effective'")


def _run_steps(rho, sequence, ctx, gamma, pulse_slices):
    weights = dephasing_weights(ctx.n_spins)
    for step in sequence.steps:
        h = pulses.step_hamiltonian(step, ctx)
        slices = 1 if step.rabi == 0.0 else pulse_slices
        rho = _split_step(rho, h, step.duration, gamma, weights, slices)
    return rho


def _master_pulse_run(rho, schedule, ctx, gamma, pulse_slices):
    n = ctx.n_spins
    times = [0.0]
    states = [rho]
    alphas = [schedule.alpha(0.0)]
    bs = [schedule.field(0.0)]
    t = 0.0
    for _ in range(schedule.n_cycles):
        seq = pulses.build_sequence(n, schedule.field(t), schedule.alpha(t),
                                    schedule.dt1, schedule.pulse_time)
        rho = _run_steps(rho, seq, ctx, gamma, pulse_slices)
        t += seq.cycle_time
        _check_density(rho, f"at t = {t:.6f} s")
        times.append(t)
        states.append(rho)
        alphas.append(schedule.alpha(t))
        bs.append(schedule.field(t))
    alphas = np.asarray(alphas)
    betas = np.asarray([schedule.beta(a, n) for a in alphas])
    return pulses.Trajectory(times=np.asarray(times), states=states,
                             alphas=alphas, bs=np.asarray(bs), betas=betas,
                             gamma=gamma, mode="master-pulse")


def _master_effective_run(rho0, schedule, ctx, gamma, rtol):
    model = pulses._EffectiveModel(schedule, ctx.couplings)
    n = model.n
    dim = 2**n
    weights = dephasing_weights(n)
    times = schedule.cycle_start_times(n)

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        out = -1j * (model.hamiltonian(t) @ rho - rho @ model.hamiltonian(t))
        if gamma > 0.0:
            out = out - gamma * weights * rho
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, float(times[-1])), rho0.ravel(), t_eval=times,
                    method="DOP853", rtol=rtol, atol=1e-12)
    if not sol.success:
        raise NumericalError(f"master-equation integration failed: {sol.message}")
    states = [sol.y[:, k].reshape(dim, dim) for k in range(sol.y.shape[1])]
    _check_density(states[-1], "at the final time")
    alphas = np.array([schedule.alpha(t) for t in times])
    bs = np.array([schedule.field(t) for t in times])
    betas = np.array([schedule.beta(a, n) for a in alphas])
    return pulses.Trajectory(times=times, states=states, alphas=alphas, bs=bs,
                             betas=betas, gamma=gamma, mode="master-effective")
