"""1/f gate-charge noise from ensembles of bistable fluctuators.

Each fluctuator contributes ``v * s_j(t) / 2`` to the gate charge, with
``s_j = +-1`` switching at rate ``gamma_j``. The rates follow ``P(gamma) ~
1/gamma`` on ``[gamma_min, gamma_max]``, which superposes Lorentzians into
a one-sided spectrum ``S(omega) = A / omega`` for
``2 gamma_min << omega << 2 gamma_max``. Spectra are one-sided in angular
frequency: ``var = int_0^inf S(omega) d omega / (2 pi)``.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dynamics import ErrorFunctional, PulseSet, TimeGrid, evaluate
from .model import ConfigurationError, GateTarget, TwoQubitSystem

#: largest allowed gamma_max * dt; the per-segment flip must stay a rare event
MAX_FLIP_RATE_DT = 0.1
STREAM_NOISE = "noise"


@dataclass(frozen=True)
class NoiseConfig:
    A: float
    gamma_min: float
    gamma_max: float
    n_fluctuators: int = 1000
    seed: int = 0
    realizations: int = 100

    def __post_init__(self):
        if self.A < 0:
            raise ConfigurationError("A must be non-negative")
        if not 0 < self.gamma_min < self.gamma_max:
            raise ConfigurationError("need 0 < gamma_min < gamma_max")
        if self.n_fluctuators < 1:
            raise ConfigurationError("n_fluctuators must be >= 1")
        if self.realizations < 1:
            raise ConfigurationError("realizations must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    @classmethod
    def for_gate(cls, A: float, tau: float, **kwargs) -> "NoiseConfig":
        """Rate window of two decades centred on ``1/tau``."""
        return cls(A=A, gamma_min=0.1 / tau, gamma_max=10.0 / tau, **kwargs)

    @property
    def log_width(self) -> float:
        return float(np.log(self.gamma_max / self.gamma_min))

    @property
    def coupling(self) -> float:
        """Per-fluctuator amplitude ``v`` with ``v^2 = 2 A ln(gmax/gmin) / (pi n_f)``."""
        return float(np.sqrt(2 * self.A * self.log_width / (np.pi * self.n_fluctuators)))


def stream_rng(seed: int, stream: str, *ids: int) -> np.random.Generator:
    """Counter-based generator for the named stream ``stream/ids...``.

    Stream names are folded in with CRC-32 so the mapping is platform stable.
    """
    key = (zlib.crc32(stream.encode()),) + tuple(int(i) for i in ids)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class FluctuatorEnsemble:
    gamma: np.ndarray
    v: float
    state0: np.ndarray

    @property
    def n(self) -> int:
        return len(self.gamma)


def sample_ensemble(cfg: NoiseConfig, qubit: int, realization: int = 0,
                    rng: np.random.Generator | None = None) -> FluctuatorEnsemble:
    """Draw switching rates (log-uniform) and initial states for one qubit."""
    if rng is None:
        rng = stream_rng(cfg.seed, STREAM_NOISE, qubit, realization)
    u = rng.random(cfg.n_fluctuators)
    gamma = cfg.gamma_min * (cfg.gamma_max / cfg.gamma_min) ** u
    state0 = np.where(rng.random(cfg.n_fluctuators) < 0.5, -1.0, 1.0)
    return FluctuatorEnsemble(gamma, cfg.coupling, state0)


def flip_probability(gamma: np.ndarray, dt: float) -> np.ndarray:
    """Probability of an odd number of switches of rate ``gamma`` within ``dt``."""
    return 0.5 * -np.expm1(-2.0 * gamma * dt)


def trajectory(ensemble: FluctuatorEnsemble, grid: TimeGrid,
               rng: np.random.Generator) -> np.ndarray:
    """Gate-charge shift on every segment, ``sum_j v s_j(t_k) / 2``.

    Each fluctuator flips between consecutive segments independently with
    probability :func:`flip_probability`. Flip times are drawn as geometric
    gaps, which has the same law as one Bernoulli trial per segment but costs
    only the number of flips.
    """
    dt = grid.dt
    if ensemble.n and np.max(ensemble.gamma) * dt >= MAX_FLIP_RATE_DT:
        raise ConfigurationError(
            f"gamma_max * dt = {np.max(ensemble.gamma) * dt:.3g} >= {MAX_FLIP_RATE_DT}; "
            "refine the time grid")
    n = grid.n_steps
    out = np.zeros(n)
    if ensemble.v == 0.0 or ensemble.n == 0:
        return out
    p = flip_probability(ensemble.gamma, dt)
    # mean flips per fluctuator over n-1 transitions plus a generous margin
    n_draw = int(np.ceil(np.max(p) * n + 8 * np.sqrt(np.max(p) * n) + 16))
    gaps = rng.geometric(np.repeat(p[:, None], n_draw, axis=1))
    pos = np.cumsum(gaps, axis=1)
    short = pos[:, -1] < n
    while np.any(short):
        extra = rng.geometric(np.repeat(p[short, None], n_draw, axis=1))
        more = np.full((ensemble.n, n_draw), n, dtype=pos.dtype)
        more[short] = pos[short, -1:] + np.cumsum(extra, axis=1)
        pos = np.concatenate([pos, more], axis=1)
        short = pos[:, -1] < n
    # a flip at position k changes the state from segment k-1 to segment k
    valid = pos < n
    order = np.cumsum(valid, axis=1) - 1
    before = ensemble.state0[:, None] * np.where(order % 2 == 0, 1.0, -1.0)
    jumps = np.bincount(pos[valid], weights=(-ensemble.v * before)[valid], minlength=n)
    out[:] = 0.5 * ensemble.v * np.sum(ensemble.state0)
    out += np.cumsum(jumps[:n])
    return out


def noise_trajectories(cfg: NoiseConfig, grid: TimeGrid, realization: int):
    """Independent gate-charge shifts for both qubits of one realization."""
    res = []
    for qubit in (1, 2):
        rng = stream_rng(cfg.seed, STREAM_NOISE, qubit, realization)
        ens = sample_ensemble(cfg, qubit, realization, rng)
        res.append(trajectory(ens, grid, rng))
    return res


@dataclass(frozen=True)
class NoisyErrorReport:
    mean_epsilon: float
    stderr: float
    M: int
    epsilons: np.ndarray


def _noisy_pulses(pulses: PulseSet, system: TwoQubitSystem, cfg: NoiseConfig,
                  realization: int) -> PulseSet:
    d1, d2 = noise_trajectories(cfg, pulses.grid, realization)
    return pulses.with_offsets({"NG1": d1, "NG2": d2}, system)


def noisy_gate_error(pulses: PulseSet, target: GateTarget, system: TwoQubitSystem,
                     cfg: NoiseConfig, threads: int = 1,
                     functional: ErrorFunctional | str = ErrorFunctional.TRACE
                     ) -> NoisyErrorReport:
    """Monte-Carlo average of the gate error over ``cfg.realizations`` noise draws.

    Realization ``r`` uses the streams ``noise/qubit-i/realization-r``; the
    result does not depend on ``threads``.
    """
    if cfg.A == 0:
        eps = evaluate(pulses, system, target, functional).epsilon
        errs = np.full(cfg.realizations, eps)
        return NoisyErrorReport(float(eps), 0.0, cfg.realizations, errs)

    def one(r):
        noisy = _noisy_pulses(pulses, system, cfg, r)
        return evaluate(noisy, system, target, functional).epsilon

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            errs = np.array(list(pool.map(one, range(cfg.realizations))))
    else:
        errs = np.array([one(r) for r in range(cfg.realizations)])
    M = len(errs)
    stderr = float(np.std(errs, ddof=1) / np.sqrt(M)) if M > 1 else 0.0
    return NoisyErrorReport(float(np.mean(errs)), stderr, M, errs)


# spectral diagnostics

def periodogram(x: np.ndarray, dt: float):
    """One-sided PSD of ``x`` against angular frequency, mean removed."""
    f, P = signal.periodogram(x, fs=1.0 / dt, detrend="constant", axis=-1)
    return 2 * np.pi * f, P


def lorentzian_sum_psd(omega: np.ndarray, cfg: NoiseConfig) -> np.ndarray:
    """Exact one-sided spectrum of the log-uniform ensemble (continuous time)."""
    omega = np.asarray(omega, dtype=float)
    pref = cfg.n_fluctuators * cfg.coupling ** 2 / (cfg.log_width * omega)
    return pref * (np.arctan(2 * cfg.gamma_max / omega) - np.arctan(2 * cfg.gamma_min / omega))


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    omega: np.ndarray
    psd: np.ndarray


def ensemble_psd(cfg: NoiseConfig, grid: TimeGrid, n_traj: int = 100,
                 qubit: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Periodogram averaged over ``n_traj`` independent trajectories."""
    acc = None
    for r in range(n_traj):
        rng = stream_rng(cfg.seed, STREAM_NOISE, qubit, r)
        ens = sample_ensemble(cfg, qubit, r, rng)
        omega, P = periodogram(trajectory(ens, grid, rng), grid.dt)
        acc = P if acc is None else acc + P
    return omega, acc / n_traj


def fit_power_law(omega: np.ndarray, psd: np.ndarray, lo: float, hi: float) -> PowerLawFit:
    """Least-squares fit of ``log S = log C + alpha log omega`` on ``[lo, hi]``."""
    sel = (omega >= lo) & (omega <= hi) & (psd > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("fewer than three frequency bins in the fit window")
    slope, intercept = np.polyfit(np.log(omega[sel]), np.log(psd[sel]), 1)
    return PowerLawFit(float(slope), float(np.exp(intercept)), omega[sel], psd[sel])


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased sample autocovariance for lags ``0..max_lag`` (mean removed)."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = len(x)
    return np.array([np.dot(x[: n - k], x[k:]) / n for k in range(max_lag + 1)])
