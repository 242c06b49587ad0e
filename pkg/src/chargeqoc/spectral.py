"""Brick-wall band limiting of pulses and gate error versus spectral cutoff.

Frequencies are angular: DFT bin ``k`` of an ``n_steps`` pulse on ``[0, tau]``
sits at ``omega_k = 2 pi k / tau``; the Nyquist frequency is ``pi / dt``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import ErrorFunctional, GateError, PulseSet, evaluate
from .model import GateTarget, TwoQubitSystem


def harmonic_frequencies(grid) -> np.ndarray:
    return 2 * np.pi * np.fft.rfftfreq(grid.n_steps, d=grid.dt)


def harmonic_cutoff(grid, k: float) -> float:
    """Angular frequency of harmonic ``k`` of the gate duration."""
    return 2 * np.pi * k / grid.tau


def lowpass_samples(x: np.ndarray, dt: float, omega_c: float) -> np.ndarray:
    if omega_c < 0:
        raise ValueError("omega_c must be non-negative")
    coeff = np.fft.rfft(x)
    # compare bin numbers, so a cutoff computed as 2 pi k / tau keeps bin k
    k_max = np.floor(omega_c * len(x) * dt / (2 * np.pi) * (1 + 1e-12))
    coeff[np.arange(len(coeff)) > k_max] = 0.0
    return np.fft.irfft(coeff, n=len(x))


def lowpass(pulses: PulseSet, omega_c: float) -> PulseSet:
    """Zero every Fourier component above ``omega_c`` in each control field.

    The real-input transform keeps conjugate symmetry, so the output is real
    by construction.
    """
    dt = pulses.grid.dt
    return PulseSet(pulses.grid, {cid: lowpass_samples(v, dt, omega_c)
                                  for cid, v in pulses.fields.items()})


def boundary_drift(original: PulseSet, filtered: PulseSet) -> float:
    """Largest change of a first or last sample caused by filtering."""
    drift = 0.0
    for cid, v in original.fields.items():
        w = filtered.fields[cid]
        drift = max(drift, abs(w[0] - v[0]), abs(w[-1] - v[-1]))
    return float(drift)


@dataclass
class CutoffSweep:
    cutoffs: np.ndarray
    errors: list[GateError]
    reference: GateError
    drifts: np.ndarray

    def __post_init__(self):
        self.cutoffs = np.asarray(self.cutoffs, dtype=float)
        if np.any(np.diff(self.cutoffs) <= 0):
            raise ValueError("cutoffs must be strictly increasing")
        if len(self.errors) != len(self.cutoffs):
            raise ValueError("one error per cutoff required")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e.epsilon for e in self.errors])

    def table(self) -> str:
        """Plot-ready text: ``omega_c,epsilon`` rows plus the unfiltered reference."""
        lines = ["# angular frequency; bin k <-> omega = 2 pi k / tau",
                 "omega_c,epsilon"]
        lines += [f"{w:.17g},{e.epsilon:.17g}" for w, e in zip(self.cutoffs, self.errors)]
        lines.append(f"inf,{self.reference.epsilon:.17g}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.table())
        return path


def cutoff_sweep(pulses: PulseSet, target: GateTarget, system: TwoQubitSystem,
                 cutoffs, threads: int = 1,
                 functional: ErrorFunctional | str = ErrorFunctional.TRACE) -> CutoffSweep:
    """Gate error of band-limited copies of ``pulses``.

    Filtered pulses are evaluated as they are; endpoints are not re-pinned
    and the resulting drift is returned alongside.
    """
    cutoffs = np.asarray(cutoffs, dtype=float)

    def one(wc):
        filt = lowpass(pulses, wc)
        return evaluate(filt, system, target, functional), boundary_drift(pulses, filt)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            res = list(pool.map(one, cutoffs))
    else:
        res = [one(wc) for wc in cutoffs]
    reference = evaluate(pulses, system, target, functional)
    return CutoffSweep(cutoffs, [r[0] for r in res], reference,
                       np.array([r[1] for r in res]))
