"""Piecewise-constant propagation and gate-error evaluation."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .model import CONTROL_IDS, ConfigurationError, GateTarget, TwoQubitSystem

logger = logging.getLogger(__name__)

PULSE_FORMAT_VERSION = 1


class ErrorFunctional(str, enum.Enum):
    #: 1 - |Tr(G^dagger U)|/4, blind to a global phase
    TRACE = "trace"
    #: 1 - Re Tr(G^dagger U)/4, phase sensitive
    REAL = "real"


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    n_steps: int = 1000

    def __post_init__(self):
        if self.n_steps < 2:
            raise ConfigurationError("n_steps must be at least 2")
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive")

    @property
    def dt(self) -> float:
        return self.tau / self.n_steps

    @property
    def t_start(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    @property
    def t_mid(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt


@dataclass
class PulseSet:
    """Piecewise-constant control samples, one value per segment.

    Controls not listed keep their idle value from the system parameters.
    """

    grid: TimeGrid
    fields: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for cid, samples in self.fields.items():
            if cid not in CONTROL_IDS:
                raise ConfigurationError(f"unknown control id {cid!r}")
            arr = np.array(samples, dtype=float)
            if arr.ndim == 0:
                arr = np.full(self.grid.n_steps, float(arr))
            if arr.shape != (self.grid.n_steps,):
                raise ConfigurationError(
                    f"{cid}: expected {self.grid.n_steps} samples, got {arr.shape}")
            clean[cid] = arr
        self.fields = clean

    def check_physical(self):
        for cid, arr in self.fields.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{cid}: non-finite samples")
            if cid.startswith("EJ") and np.any(arr < 0):
                raise ValueError(f"{cid}: Josephson energies must be >= 0")

    def copy(self) -> "PulseSet":
        return PulseSet(self.grid, {k: v.copy() for k, v in self.fields.items()})

    def with_offsets(self, offsets: dict[str, np.ndarray],
                     system: TwoQubitSystem) -> "PulseSet":
        """Add per-segment offsets, materializing idle controls if needed."""
        out = self.copy()
        idle = system.idle_values()
        for cid, delta in offsets.items():
            base = out.fields.get(cid, np.full(self.grid.n_steps, idle[cid]))
            out.fields[cid] = base + delta
        return out

    def upsample(self, factor: int) -> "PulseSet":
        """Split every segment into ``factor`` equal pieces (same dynamics)."""
        grid = TimeGrid(self.grid.tau, self.grid.n_steps * factor)
        return PulseSet(grid, {k: np.repeat(v, factor) for k, v in self.fields.items()})


@dataclass(frozen=True)
class Propagator:
    U: np.ndarray
    steps: np.ndarray | None = None


@dataclass(frozen=True)
class GateError:
    epsilon: float
    leakage_max: float

    @property
    def fidelity(self) -> float:
        return 1.0 - self.epsilon


def step_exponential(H: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian ``H`` via eigendecomposition."""
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigendecomposition failed (max|H|={np.max(np.abs(H)):.3g})") from exc
    return (V * np.exp(-1j * w * dt)) @ V.conj().T


def as_real_symmetric(H: np.ndarray) -> np.ndarray:
    """Real part of ``H``, refusing matrices with a non-negligible imaginary part.

    Every charge-basis Hamiltonian of the model is real; the real eigensolver
    is roughly twice as fast as the complex one.
    """
    if np.iscomplexobj(H):
        if np.max(np.abs(H.imag), initial=0.0) > 1e-14 * max(np.max(np.abs(H.real)), 1.0):
            raise ValueError("Hamiltonian has an imaginary part; expected real symmetric")
        H = H.real
    return np.ascontiguousarray(H, dtype=float)


def step_unitaries(H_stack: np.ndarray, dt: float):
    """Batched segment exponentials; returns ``(U_steps, eigvals, eigvecs)``."""
    w, V = np.linalg.eigh(as_real_symmetric(H_stack))
    U = (V * np.exp(-1j * w * dt)[:, None, :]) @ np.swapaxes(V, 1, 2)
    return U, w, V


def _hamiltonians(pulses: PulseSet, system: TwoQubitSystem) -> np.ndarray:
    for cid, arr in pulses.fields.items():
        if np.any(np.isnan(arr)):
            raise ValueError(f"{cid}: NaN in pulse samples")
    H = system.hamiltonian_stack(pulses.fields)
    if H.shape[0] == 1 and pulses.grid.n_steps > 1:
        H = np.broadcast_to(H, (pulses.grid.n_steps,) + H.shape[1:])
    # exact exponentials keep this harmless; it only affects update resolution
    norm = np.max(np.abs(H[0]))
    if pulses.grid.dt * norm > 0.1:
        logger.info("dt * max|H| = %.2g exceeds 0.1", pulses.grid.dt * norm)
    return np.ascontiguousarray(H)


def propagate(pulses: PulseSet, system: TwoQubitSystem,
              keep_steps: bool = False) -> Propagator:
    """Time-ordered product of exact segment exponentials (latest leftmost)."""
    H = _hamiltonians(pulses, system)
    U_steps, _, _ = step_unitaries(H, pulses.grid.dt)
    U_steps = np.ascontiguousarray(U_steps)
    U = kernels.ordered_product(U_steps)
    return Propagator(U, U_steps if keep_steps else None)


def project_computational(U: Propagator | np.ndarray, target: GateTarget) -> np.ndarray:
    """``B^dagger U B`` with ``B`` the computational embedding."""
    mat = U.U if isinstance(U, Propagator) else U
    B = target.embedding
    if B.shape[0] != mat.shape[0]:
        raise ConfigurationError("embedding dimension does not match propagator")
    return B.conj().T @ mat @ B


def gate_error(U_tilde: np.ndarray, target: GateTarget,
               functional: ErrorFunctional | str = ErrorFunctional.TRACE) -> GateError:
    """Gate error of a projected evolution ``U_tilde`` against ``target``.

    ``leakage_max`` is the largest population lost from the computational
    subspace over the four computational inputs.
    """
    overlap = np.trace(target.matrix.conj().T @ U_tilde) / 4
    if ErrorFunctional(functional) is ErrorFunctional.TRACE:
        eps = 1.0 - abs(overlap)
    else:
        eps = 1.0 - overlap.real
    leak = 1.0 - np.sum(np.abs(U_tilde) ** 2, axis=0)
    leak[np.abs(leak) < 1e-13] = 0.0
    return GateError(float(min(max(eps, 0.0), 1.0)),
                     float(np.clip(leak.max(), 0.0, 1.0)))


def evaluate(pulses: PulseSet, system: TwoQubitSystem, target: GateTarget,
             functional: ErrorFunctional | str = ErrorFunctional.TRACE) -> GateError:
    """Propagate ``pulses`` and score the resulting gate."""
    prop = propagate(pulses, system)
    return gate_error(project_computational(prop, target), target, functional)


# pulse files

def write_pulses(path, pulses: PulseSet, controls=None):
    """Write a multi-column pulse file (``t_start`` plus one column per id).

    Values are written with 17 significant digits so a read-back is exact.
    """
    controls = list(controls or pulses.fields)
    path = Path(path)
    cols = [pulses.grid.t_start] + [pulses.fields[c] for c in controls]
    with path.open("w") as fh:
        fh.write(f"# chargeqoc-pulses v{PULSE_FORMAT_VERSION} "
                 f"tau={pulses.grid.tau:.17g} n_steps={pulses.grid.n_steps}\n")
        fh.write(",".join(["t_start"] + controls) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_pulses(path) -> PulseSet:
    """Read a pulse file written by :func:`write_pulses`."""
    path = Path(path)
    lines = path.read_text().splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
        lines = lines[1:]
    if not lines:
        raise ValueError(f"{path}: empty pulse file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "t_start":
        raise ValueError(f"{path}: first column must be t_start")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:] if ln.strip()]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    n_steps = int(meta.get("n_steps", len(rows)))
    if "tau" in meta:
        tau = float(meta["tau"])
    else:
        dt = data[1, 0] - data[0, 0]
        tau = dt * n_steps
    grid = TimeGrid(tau, n_steps)
    return PulseSet(grid, {cid: data[:, i + 1] for i, cid in enumerate(header[1:])})
