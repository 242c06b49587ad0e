"""Krotov optimization of piecewise-constant control pulses.

Update rule for every controlled channel ``a`` on segment ``j``::

    g_a(t_j) <- g_a(t_j) + s(t_j)/lambda0 * sum_k Im <chi_k(t_j)| dH/dg_a |psi_k(t_j)>

with ``psi_k`` forward-propagated under the *new* pulse (sequential update)
and ``chi_k`` backward-propagated under the old one. The derivative
``dH/dg_a`` is replaced by its segment average in the interaction picture,
which makes the update the exact gradient of the discretized functional
instead of a first-order approximation in ``dt``.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._kernels_py import average_kernel
from .dynamics import PulseSet, TimeGrid, as_real_symmetric
from .model import ConfigurationError, GateTarget, TwoQubitSystem

logger = logging.getLogger(__name__)


class Functional(str, enum.Enum):
    #: one phase-coherent overlap c = Tr(G^dagger U)/4 shared by all inputs
    TRACE_GLOBAL_PHASE = "trace_global_phase"
    #: independent overlaps per input state (tolerates relative phases)
    PER_STATE = "per_state"


class Termination(str, enum.Enum):
    TARGET_REACHED = "target_reached"
    STALLED = "stalled"
    MAX_ITERS = "max_iters"


@dataclass
class KrotovConfig:
    lambda0: float = 100.0
    max_iters: int = 500
    target_error: float = 1e-6
    stall_tolerance: float = 1e-10
    stall_window: int = 50
    functional: Functional = Functional.TRACE_GLOBAL_PHASE

    def __post_init__(self):
        self.functional = Functional(self.functional)
        if not self.lambda0 > 0:
            raise ConfigurationError("lambda0 must be positive")
        if not 0 < self.target_error < 1:
            raise ConfigurationError("target_error must lie in (0, 1)")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be >= 0")


def update_shape(grid: TimeGrid) -> np.ndarray:
    """``sin^2(pi t/tau)`` at segment midpoints, zero on both end segments."""
    s = np.sin(np.pi * grid.t_mid / grid.tau) ** 2
    s[0] = s[-1] = 0.0
    return s


@dataclass(frozen=True)
class Channel:
    """One optimized control function driving one or more control ids."""

    name: str
    ids: tuple[str, ...]
    lower: float = -np.inf
    start: float = 0.0
    end: float = 0.0


@dataclass
class ControlProblem:
    system: TwoQubitSystem
    grid: TimeGrid
    channels: list[Channel]
    fixed: dict[str, float] = field(default_factory=dict)

    @classmethod
    def jj_preset(cls, system: TwoQubitSystem, grid: TimeGrid) -> "ControlProblem":
        """One pulse shared by all three Josephson energies, gates fixed."""
        idle = system.idle_values()
        if not system.has_jj:
            raise ConfigurationError("JJ preset needs Josephson coupling")
        e = idle["EJ1"]
        if not (idle["EJ2"] == e == idle["EJJ"]):
            raise ConfigurationError("JJ preset ties EJ1, EJ2 and EJJ; idle values differ")
        ch = Channel("EJ", ("EJ1", "EJ2", "EJJ"), lower=0.0, start=e, end=e)
        return cls(system, grid, [ch])

    @classmethod
    def cc_preset(cls, system: TwoQubitSystem, grid: TimeGrid) -> "ControlProblem":
        """Both gate charges pulsed, Josephson energies fixed."""
        idle = system.idle_values()
        chans = [Channel(c, (c,), start=idle[c], end=idle[c]) for c in ("NG1", "NG2")]
        return cls(system, grid, chans)

    @property
    def channel_map(self) -> dict[str, tuple[str, ...]]:
        return {ch.name: ch.ids for ch in self.channels}

    def channel_values(self, pulses: PulseSet) -> np.ndarray:
        """Extract ``(n_channels, n_steps)`` samples, checking tied controls."""
        if pulses.grid != self.grid:
            raise ConfigurationError("pulse grid does not match the problem grid")
        idle = self.system.idle_values()
        out = np.empty((len(self.channels), self.grid.n_steps))
        for a, ch in enumerate(self.channels):
            arrs = [pulses.fields.get(cid, np.full(self.grid.n_steps, idle[cid]))
                    for cid in ch.ids]
            for other in arrs[1:]:
                if not np.array_equal(other, arrs[0]):
                    raise ValueError(f"channel {ch.name}: tied controls differ")
            out[a] = arrs[0]
        return out

    def pulses_from(self, g: np.ndarray) -> PulseSet:
        fields = {}
        for a, ch in enumerate(self.channels):
            for cid in ch.ids:
                fields[cid] = np.array(g[a], dtype=float)
        for cid, v in self.fixed.items():
            fields[cid] = np.full(self.grid.n_steps, float(v))
        return PulseSet(self.grid, fields)

    def check_boundaries(self, g: np.ndarray):
        for a, ch in enumerate(self.channels):
            if g[a, 0] != ch.start or g[a, -1] != ch.end:
                raise ValueError(
                    f"channel {ch.name}: pulse must start at {ch.start!r} and end at "
                    f"{ch.end!r}, got {g[a, 0]!r} and {g[a, -1]!r}")

    def affine(self):
        return self.system.affine_split(self.channel_map, self.fixed)


@dataclass
class OptResult:
    final_pulses: PulseSet
    error_history: np.ndarray
    iterations_run: int
    terminated_by: Termination
    wall_time: float = 0.0

    @property
    def epsilon_min(self) -> float:
        return float(self.error_history[-1])


def _overlaps(psi_T: np.ndarray, T: np.ndarray, functional: Functional):
    """Return ``(error, chi_T)`` for final states ``psi_T`` (rows)."""
    ck = np.sum(T.conj() * psi_T, axis=1)
    if functional is Functional.TRACE_GLOBAL_PHASE:
        c = ck.sum() / len(ck)
        return 1.0 - abs(c), c * T
    F = np.mean(np.abs(ck) ** 2)
    return 1.0 - F, ck[:, None] * T


def _fidelity(psi_T, T, functional):
    """Quadratic figure of merit whose gradient the update follows."""
    ck = np.sum(T.conj() * psi_T, axis=1)
    if functional is Functional.TRACE_GLOBAL_PHASE:
        return abs(ck.sum() / len(ck)) ** 2
    return float(np.mean(np.abs(ck) ** 2))


def _eig_stack(H0, Hc, g):
    H = H0[None] + np.einsum("an,aij->nij", g, Hc)
    return np.linalg.eigh(H)


def _backward_prime(w, V, chi_T, dt):
    """Backward states at each segment start, expressed in that segment's eigenbasis."""
    chi = kernels.eigen_chain(w, V, np.ascontiguousarray(chi_T), dt, True)
    return np.ascontiguousarray(chi[:-1] @ V)


def krotov_optimize(problem: ControlProblem, init: PulseSet, target: GateTarget,
                    cfg: KrotovConfig | None = None, callback=None) -> OptResult:
    """Minimize the gate error with sequential Krotov sweeps.

    The update shape ``s(t)`` vanishes on the first and last segment, so the
    boundary values of ``init`` are preserved exactly.
    """
    cfg = cfg or KrotovConfig()
    t0 = time.perf_counter()
    grid = problem.grid
    dt = grid.dt
    g = problem.channel_values(init)
    problem.check_boundaries(g)
    H0, Hc = (as_real_symmetric(m) for m in problem.affine())
    psi0 = np.ascontiguousarray(target.embedding.T)
    T = np.ascontiguousarray(target.targets.T)
    weight = np.ascontiguousarray(
        np.broadcast_to(update_shape(grid) / cfg.lambda0, g.shape))
    lower = np.array([ch.lower for ch in problem.channels], dtype=float)

    w, V = _eig_stack(H0, Hc, g)
    psi_T = kernels.eigen_chain(w, V, psi0, dt)[-1]
    err, chi_T = _overlaps(psi_T, T, cfg.functional)
    history = [err]
    terminated = Termination.MAX_ITERS
    if err <= cfg.target_error:
        terminated = Termination.TARGET_REACHED
    it = 0
    while it < cfg.max_iters and terminated is Termination.MAX_ITERS:
        chip = _backward_prime(w, V, chi_T, dt)
        it += 1
        hint = "; increase lambda0 or refine the time grid"
        try:
            g_new, w, V, psi_T = kernels.krotov_sweep(
                H0, Hc, np.ascontiguousarray(g), weight, lower, w, V, chip, psi0, dt)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            raise type(exc)(f"iteration {it}: {exc}{hint}") from exc
        if not np.all(np.isfinite(g_new)) or not np.all(np.isfinite(psi_T)):
            raise FloatingPointError(f"iteration {it}: non-finite pulse update{hint}")
        g = g_new
        err, chi_T = _overlaps(psi_T, T, cfg.functional)
        history.append(err)
        if callback is not None:
            callback(it, err)
        if err <= cfg.target_error:
            terminated = Termination.TARGET_REACHED
        elif len(history) > cfg.stall_window:
            ref = history[-1 - cfg.stall_window]
            if ref - err < cfg.stall_tolerance * max(ref, 1e-300):
                terminated = Termination.STALLED
        if it % 50 == 0:
            logger.info("krotov iteration %d: error %.6e", it, err)
    return OptResult(problem.pulses_from(g), np.array(history), it, terminated,
                     time.perf_counter() - t0)


@dataclass
class GradientReport:
    analytic: np.ndarray
    finite_difference: np.ndarray
    segments: np.ndarray

    @property
    def max_relative_deviation(self) -> float:
        scale = np.max(np.abs(self.finite_difference))
        return float(np.max(np.abs(self.analytic - self.finite_difference)) / scale)


def functional_gradient(problem: ControlProblem, pulses: PulseSet, target: GateTarget,
                        functional: Functional = Functional.TRACE_GLOBAL_PHASE):
    """``dF/dg_a(t_j)`` from the Krotov update direction, ``(n_channels, n_steps)``."""
    functional = Functional(functional)
    g = problem.channel_values(pulses)
    H0, Hc = (as_real_symmetric(m) for m in problem.affine())
    dt = problem.grid.dt
    w, V = _eig_stack(H0, Hc, g)
    psi0 = np.ascontiguousarray(target.embedding.T)
    T = np.ascontiguousarray(target.targets.T)
    psi = kernels.eigen_chain(w, V, psi0, dt)
    _, chi_T = _overlaps(psi[-1], T, functional)
    chip = _backward_prime(w, V, chi_T, dt)
    psip = psi[:-1] @ V
    Ap = np.swapaxes(V, 1, 2)[:, None] @ Hc[None] @ V[:, None]
    B = Ap * average_kernel(w, dt)[:, None]
    val = np.einsum("nkm,namq,nkq->an", chip.conj(), B, psip)
    return 0.5 * dt * val.imag


def gradient_check(problem: ControlProblem, pulses: PulseSet, target: GateTarget,
                   functional: Functional = Functional.TRACE_GLOBAL_PHASE,
                   segments=None, h: float = 1e-6) -> GradientReport:
    """Compare the update direction with central finite differences.

    The finite differences perturb one segment value of one channel and
    re-exponentiate the full Hamiltonian from :meth:`TwoQubitSystem.hamiltonian`,
    so the affine split used by the optimizer is checked too.
    """
    functional = Functional(functional)
    grid = problem.grid
    segs = np.arange(grid.n_steps) if segments is None else np.asarray(segments)
    analytic = functional_gradient(problem, pulses, target, functional)[:, segs]
    g = problem.channel_values(pulses)
    system = problem.system
    base = {cid: arr for cid, arr in problem.pulses_from(g).fields.items()}
    H = as_real_symmetric(system.hamiltonian_stack(base))
    w, V = np.linalg.eigh(H)
    psi0 = np.ascontiguousarray(target.embedding.T)
    T = np.ascontiguousarray(target.targets.T)
    fwd = kernels.eigen_chain(w, V, psi0, grid.dt)
    bwd = kernels.eigen_chain(w, V, T, grid.dt, True)
    fd = np.empty_like(analytic)
    for a, ch in enumerate(problem.channels):
        for i, j in enumerate(segs):
            vals = []
            for sign in (1.0, -1.0):
                point = {cid: arr[j] for cid, arr in base.items()}
                for cid in ch.ids:
                    point[cid] = g[a, j] + sign * h
                Hj = system.hamiltonian(point)
                wj, Vj = np.linalg.eigh(Hj)
                Uj = (Vj * np.exp(-1j * wj * grid.dt)) @ Vj.conj().T
                # final-time overlaps through the perturbed segment only
                ck = np.einsum("km,mn,kn->k", bwd[j + 1].conj(), Uj, fwd[j])
                if functional is Functional.TRACE_GLOBAL_PHASE:
                    vals.append(abs(ck.sum() / len(ck)) ** 2)
                else:
                    vals.append(float(np.mean(np.abs(ck) ** 2)))
            fd[a, i] = (vals[0] - vals[1]) / (2 * h)
    return GradientReport(analytic, fd, segs)
