"""Trapped-ion spin chains in a static magnetic-field gradient.

The package splits into static chain physics (:mod:`ionchain.trap`), dense
spin Hamiltonians (:mod:`ionchain.spins`), the stroboscopic microwave pulse
protocol and adiabatic ramps (:mod:`ionchain.pulses`), open-system dephasing
(:mod:`ionchain.dephasing`), entanglement/fidelity observables
(:mod:`ionchain.observables`), and file/CLI plumbing (:mod:`ionchain.tables`,
:mod:`ionchain.config`, :mod:`ionchain.runner`, :mod:`ionchain.cli`).
"""

from .errors import (
    ConfigError,
    NumericalError,
    PositivityError,
    SimulationError,
    UnstableConfigurationError,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "PositivityError",
    "SimulationError",
    "UnstableConfigurationError",
]

__version__ = "0.1.0"
