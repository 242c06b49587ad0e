"""Analytic (non-optimized) gate schemes and the parameter sets they use.

Two constant-coupling constructions serve as baselines and initial guesses:

* Josephson-coupled boxes at charge degeneracy with all three Josephson
  energies equal, switched on for ``tau_jj = 0.97 * 2 pi / E_J``.
* Capacitively coupled boxes at a fixed off-degeneracy working point, held for
  ``tau_cc = 1.18 pi / E_J1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlProblem, update_shape
from .dynamics import GateError, PulseSet, TimeGrid, evaluate
from .model import (ChargeBasis, CouplingSpec, GateKind, GateTarget, QubitParams,
                    TwoQubitSystem, make_gate_target)

#: Josephson-scheme duration in units of 2 pi / E_J
JJ_TAU_FACTOR = 0.97
#: capacitive-scheme duration in units of pi / E_J1
CC_TAU_FACTOR = 1.18

#: measured ratios of the capacitively coupled sample, energies in units of E_C1
CC_EXPERIMENT = {
    "E_J_over_E_C1": 0.0777,
    "E_J_over_E_C2": 0.0610,
    "E_cc_over_E_C1": 0.1653,
    "E_J_over_E_cc": 0.47,
}

#: constant gate charges used by the capacitive scheme (tuned for G_cc)
CC_WORKING_POINT = (0.391, 0.525)


def tau_jj(E_J: float, factor: float = JJ_TAU_FACTOR) -> float:
    return factor * 2 * np.pi / E_J


def tau_cc(E_J1: float, factor: float = CC_TAU_FACTOR) -> float:
    return factor * np.pi / E_J1


def jj_system(E_J_over_E_C: float, basis: ChargeBasis | None = None,
              residual_ratio: float = 0.05, n_g: float = 0.5,
              E_C: float = 1.0) -> TwoQubitSystem:
    """Identical boxes with ``E_J1 = E_J2 = E_JJ`` and ``E_cc = residual_ratio * E_JJ``."""
    E_J = E_J_over_E_C * E_C
    q = QubitParams(E_C, E_J, n_g)
    coupling = CouplingSpec("josephson", E_cc=residual_ratio * E_J, E_JJ_idle=E_J)
    return TwoQubitSystem(basis or ChargeBasis(), q, q, coupling)


def cc_system(E_J_over_E_cc: float = CC_EXPERIMENT["E_J_over_E_cc"],
              basis: ChargeBasis | None = None,
              working_point: tuple[float, float] = CC_WORKING_POINT,
              E_cc: float = CC_EXPERIMENT["E_cc_over_E_C1"],
              E_C2: float | None = None) -> TwoQubitSystem:
    """Capacitively coupled boxes with one common Josephson energy.

    ``E_C1 = 1``. By default ``E_C2`` reproduces the measured ratio
    ``E_J/E_C2`` at the experimental ``E_J/E_cc`` and stays fixed when the
    ratio is varied.
    """
    if E_C2 is None:
        E_C2 = CC_EXPERIMENT["E_J_over_E_C1"] / CC_EXPERIMENT["E_J_over_E_C2"]
    E_J = E_J_over_E_cc * E_cc
    q1 = QubitParams(1.0, E_J, working_point[0])
    q2 = QubitParams(E_C2, E_J, working_point[1])
    return TwoQubitSystem(basis or ChargeBasis(), q1, q2, CouplingSpec("capacitive", E_cc))


def jj_target(basis: ChargeBasis, kind: GateKind | str = GateKind.G_JJ_MINUS) -> GateTarget:
    """``G_JJ`` in the qubit-2 labelling that the exchange scheme realizes."""
    return make_gate_target(kind, basis, flip_second=True)


def cc_target(basis: ChargeBasis) -> GateTarget:
    return make_gate_target(GateKind.G_CC, basis)


def scheme_pulses(system: TwoQubitSystem, grid: TimeGrid) -> PulseSet:
    """All controls held at their idle values for the whole gate."""
    idle = system.idle_values()
    ids = ["EJ1", "EJ2", "NG1", "NG2"] + (["EJJ"] if system.has_jj else [])
    return PulseSet(grid, {cid: idle[cid] for cid in ids})


def modulated_guess(problem: ControlProblem, amplitude: float = 0.0,
                    harmonic: int = 2) -> PulseSet:
    """Scheme pulse with a relative ``sin`` modulation under the update envelope.

    ``g(t) = g_idle * (1 + amplitude * s(t) * sin(2 pi harmonic t / tau))``
    on the first channel; other channels stay constant. Endpoints are idle.
    """
    grid = problem.grid
    idle = problem.system.idle_values()
    g = np.array([np.full(grid.n_steps, idle[ch.ids[0]]) for ch in problem.channels])
    if amplitude:
        mod = update_shape(grid) * np.sin(2 * np.pi * harmonic * grid.t_mid / grid.tau)
        g[0] = g[0] * (1.0 + amplitude * mod)
    return problem.pulses_from(g)


def random_smooth_guess(problem: ControlProblem, rng: np.random.Generator,
                        amplitude: float = 0.3, n_harmonics: int = 4) -> PulseSet:
    """Idle values plus a random low-harmonic sine series under the update envelope."""
    grid = problem.grid
    idle = problem.system.idle_values()
    s = update_shape(grid)
    x = grid.t_mid / grid.tau
    g = np.empty((len(problem.channels), grid.n_steps))
    for a, ch in enumerate(problem.channels):
        coeff = rng.uniform(-1, 1, n_harmonics) / np.arange(1, n_harmonics + 1)
        series = sum(c * np.sin(np.pi * (k + 1) * x) for k, c in enumerate(coeff))
        base = idle[ch.ids[0]]
        scale = abs(base) if base else 1.0
        g[a] = base + amplitude * scale * s * series
        if np.isfinite(ch.lower):
            g[a] = np.maximum(g[a], ch.lower)
    return problem.pulses_from(g)


@dataclass(frozen=True)
class Baseline:
    error: GateError
    tau: float
    pulses: PulseSet


def baseline_jj_gate(E_J_over_E_C: float, basis: ChargeBasis | None = None,
                     residual_ratio: float = 0.05, n_steps: int = 1000,
                     kind: GateKind | str = GateKind.G_JJ_MINUS) -> Baseline:
    basis = basis or ChargeBasis()
    system = jj_system(E_J_over_E_C, basis, residual_ratio)
    grid = TimeGrid(tau_jj(system.q1.E_J_idle), n_steps)
    pulses = scheme_pulses(system, grid)
    return Baseline(evaluate(pulses, system, jj_target(basis, kind)), grid.tau, pulses)


def baseline_cc_gate(E_J_over_E_cc: float = CC_EXPERIMENT["E_J_over_E_cc"],
                     basis: ChargeBasis | None = None, n_steps: int = 1000,
                     **kwargs) -> Baseline:
    """Capacitive scheme held for ``tau_cc``; its error is a regression anchor only."""
    basis = basis or ChargeBasis()
    system = cc_system(E_J_over_E_cc, basis, **kwargs)
    grid = TimeGrid(tau_cc(system.q1.E_J_idle), n_steps)
    pulses = scheme_pulses(system, grid)
    return Baseline(evaluate(pulses, system, cc_target(basis)), grid.tau, pulses)
