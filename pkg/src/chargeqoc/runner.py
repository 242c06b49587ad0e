"""Scenario execution: build systems from a config, run the study, write outputs.

Outputs in the run directory:

* ``record.json``: config echo, per-point results, pulse-file references,
  seed lineage, wall-clock, and a ``complete`` flag.
* ``curve.csv``: the plot-ready table of the scenario (stable column names,
  17 significant digits, no timing data so reruns are byte-identical).
* ``pulses/*.csv``: optimized pulses in the standard pulse format.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Scenario, ScenarioConfig, dump_config
from .control import ControlProblem, KrotovConfig, OptResult, krotov_optimize
from .dynamics import (ErrorFunctional, GateError, PulseSet, TimeGrid, evaluate,
                       gate_error, project_computational, read_pulses, write_pulses)
from .model import (ChargeBasis, ConfigurationError, CouplingSpec, QubitParams,
                    TwoQubitSystem, make_gate_target)
from .noise import NoiseConfig, noisy_gate_error
from .schemes import modulated_guess, scheme_pulses
from .spectral import cutoff_sweep, harmonic_cutoff

logger = logging.getLogger(__name__)

CSV_COLUMNS = {
    "leakage": ["x", "tau", "epsilon_baseline", "leakage_baseline", "epsilon_optimized",
                "leakage_optimized", "iterations", "terminated_by", "lambda0", "marked"],
    "noise": ["A", "epsilon_optimized", "stderr_optimized", "epsilon_baseline",
              "stderr_baseline", "realizations"],
    "filter": ["harmonic", "omega_c", "epsilon", "leakage_max", "boundary_drift"],
    "single": ["tau", "epsilon_baseline", "leakage_baseline", "epsilon_optimized",
               "leakage_optimized", "iterations", "terminated_by"],
    "evaluate": ["tau", "epsilon", "leakage_max"],
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class Point:
    """A fully resolved physical setup for one sweep value."""

    system: TwoQubitSystem
    grid: TimeGrid
    lambda0: float | None


@dataclass
class RunRecord:
    scenario: str
    config: dict
    version: str = __version__
    points: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    pulse_files: list[str] = field(default_factory=list)
    seed_lineage: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    complete: bool = False
    error: dict | None = None

    def to_json(self) -> dict:
        return {
            "artifact": "chargeqoc-run",
            "version": self.version,
            "scenario": self.scenario,
            "complete": self.complete,
            "error": self.error,
            "config": self.config,
            "points": self.points,
            "extra": self.extra,
            "pulse_files": self.pulse_files,
            "seed_lineage": self.seed_lineage,
            "wall_clock_seconds": self.wall_clock,
        }

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "record.json"
        path.write_text(json.dumps(self.to_json(), indent=2, default=_json_default) + "\n")
        return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# building blocks

def _tau(cfg: ScenarioConfig, E_J: float) -> float:
    gate = cfg.gate
    if gate.tau_rule == "fixed":
        return gate.tau
    if E_J <= 0:
        raise ConfigurationError("duration rule needs a positive Josephson energy")
    if gate.tau_rule == "jj":
        return gate.tau_factor * 2 * np.pi / E_J
    return gate.tau_factor * np.pi / E_J


def build_point(cfg: ScenarioConfig, x: float | None = None,
                lambda0: float | None = None) -> Point:
    """System and grid at sweep value ``x`` (``None``: the configured system)."""
    s = cfg.system
    E_J, E_cc = s.E_J, s.E_cc
    if cfg.scenario is Scenario.JJ_LEAKAGE and x is not None:
        E_J = x * s.E_C1
        E_cc = s.residual_ratio * E_J
    elif cfg.scenario is Scenario.CC_LEAKAGE and x is not None:
        E_J = x * s.E_cc
    basis = ChargeBasis(cfg.basis.n_min, cfg.basis.n_max)
    q1 = QubitParams(s.E_C1, E_J, s.n_g1)
    q2 = QubitParams(s.E_C2, E_J, s.n_g2)
    if s.coupling == "josephson":
        coupling = CouplingSpec("josephson", E_cc=E_cc, E_JJ_idle=E_J)
    else:
        coupling = CouplingSpec("capacitive", E_cc=E_cc)
    system = TwoQubitSystem(basis, q1, q2, coupling)
    grid = TimeGrid(_tau(cfg, E_J), cfg.grid.n_steps)
    if lambda0 is None and cfg.krotov is not None:
        lambda0 = cfg.krotov.lambda0
    return Point(system, grid, lambda0)


def build_target(cfg: ScenarioConfig, basis: ChargeBasis):
    return make_gate_target(cfg.gate.target, basis, flip_second=cfg.gate.flip_second)


def build_problem(cfg: ScenarioConfig, point: Point) -> ControlProblem:
    if cfg.system.coupling == "josephson":
        return ControlProblem.jj_preset(point.system, point.grid)
    return ControlProblem.cc_preset(point.system, point.grid)


def initial_pulses(cfg: ScenarioConfig, problem: ControlProblem, base_dir: Path) -> PulseSet:
    init = cfg.initial
    if init.kind == "file":
        pulses = read_pulses(_resolve_path(init.path, base_dir))
        if pulses.grid.n_steps != problem.grid.n_steps:
            raise ConfigurationError("initial pulse file has the wrong number of segments")
        return problem.pulses_from(problem.channel_values(
            PulseSet(problem.grid, pulses.fields)))
    amp = init.amplitude if init.kind == "modulated" else 0.0
    return modulated_guess(problem, amp, init.harmonic)


def _resolve_path(p: str, base_dir: Path) -> Path:
    path = Path(p)
    return path if path.is_absolute() else base_dir / path


def krotov_config(cfg: ScenarioConfig, lambda0: float) -> KrotovConfig:
    k = cfg.krotov
    return KrotovConfig(lambda0=lambda0, max_iters=k.max_iters, target_error=k.target_error,
                        stall_tolerance=k.stall_tolerance, stall_window=k.stall_window,
                        functional=k.functional)


@dataclass
class Optimized:
    point: Point
    baseline: GateError
    baseline_pulses: PulseSet
    result: OptResult
    error: GateError


def optimize_point(cfg: ScenarioConfig, point: Point, base_dir: Path) -> Optimized:
    target = build_target(cfg, point.system.basis)
    functional = ErrorFunctional(cfg.gate.error)
    base_pulses = scheme_pulses(point.system, point.grid)
    baseline = evaluate(base_pulses, point.system, target, functional)
    problem = build_problem(cfg, point)
    init = initial_pulses(cfg, problem, base_dir)
    res = krotov_optimize(problem, init, target, krotov_config(cfg, point.lambda0))
    err = evaluate(res.final_pulses, point.system, target, functional)
    return Optimized(point, baseline, base_pulses, res, err)


# scenarios

def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _save_pulses(record: RunRecord, out_dir: Path, name: str, pulses: PulseSet) -> str:
    rel = Path("pulses") / f"{name}.csv"
    (out_dir / "pulses").mkdir(exist_ok=True)
    write_pulses(out_dir / rel, pulses)
    record.pulse_files.append(str(rel))
    return str(rel)


def _run_leakage(cfg, record, out_dir, base_dir, threads):
    sw = cfg.sweep
    lams = sw.lambda0 or [cfg.krotov.lambda0] * len(sw.values)
    points = [build_point(cfg, x, lam) for x, lam in zip(sw.values, lams)]
    results = _map(lambda p: optimize_point(cfg, p, base_dir), points, threads)
    rows = []
    for i, (x, opt) in enumerate(zip(sw.values, results)):
        ref = _save_pulses(record, out_dir, f"point-{i:03d}",
                           opt.result.final_pulses)
        row = {
            "x": x, "tau": opt.point.grid.tau,
            "epsilon_baseline": opt.baseline.epsilon,
            "leakage_baseline": opt.baseline.leakage_max,
            "epsilon_optimized": opt.error.epsilon,
            "leakage_optimized": opt.error.leakage_max,
            "iterations": opt.result.iterations_run,
            "terminated_by": opt.result.terminated_by.value,
            "lambda0": opt.point.lambda0,
            "marked": any(np.isclose(x, m) for m in sw.marked),
        }
        rows.append(row)
        record.points.append({**row, "pulse_file": ref,
                              "error_history": opt.result.error_history})
    write_csv(out_dir / "curve.csv", CSV_COLUMNS["leakage"], rows)


def _noise_config(cfg: ScenarioConfig, A: float, tau: float, seed: int) -> NoiseConfig:
    n = cfg.noise
    return NoiseConfig(A=A,
                       gamma_min=n.gamma_min if n.gamma_min is not None else 0.1 / tau,
                       gamma_max=n.gamma_max if n.gamma_max is not None else 10.0 / tau,
                       n_fluctuators=n.n_fluctuators, seed=seed,
                       realizations=n.realizations)


def _run_noise(cfg, record, out_dir, base_dir, threads):
    point = build_point(cfg)
    opt = optimize_point(cfg, point, base_dir)
    target = build_target(cfg, point.system.basis)
    functional = ErrorFunctional(cfg.gate.error)
    ref = _save_pulses(record, out_dir, "optimized", opt.result.final_pulses)
    record.extra.update({
        "epsilon_optimized_noiseless": opt.error.epsilon,
        "epsilon_baseline_noiseless": opt.baseline.epsilon,
        "iterations": opt.result.iterations_run,
        "terminated_by": opt.result.terminated_by.value,
        "error_history": opt.result.error_history,
        "pulse_file": ref,
    })
    rows = []
    for A in cfg.sweep.values:
        ncfg = _noise_config(cfg, A, point.grid.tau, cfg.seed)
        # common random numbers: both pulses see the same noise realizations
        o = noisy_gate_error(opt.result.final_pulses, target, point.system, ncfg,
                             threads, functional)
        b = noisy_gate_error(opt.baseline_pulses, target, point.system, ncfg,
                             threads, functional)
        row = {"A": A, "epsilon_optimized": o.mean_epsilon, "stderr_optimized": o.stderr,
               "epsilon_baseline": b.mean_epsilon, "stderr_baseline": b.stderr,
               "realizations": o.M}
        rows.append(row)
        record.points.append({**row, "gamma_min": ncfg.gamma_min,
                              "gamma_max": ncfg.gamma_max,
                              "n_fluctuators": ncfg.n_fluctuators,
                              "coupling_v": ncfg.coupling})
    record.seed_lineage["streams"] = "noise/qubit-{1,2}/realization-{0..M-1}"
    write_csv(out_dir / "curve.csv", CSV_COLUMNS["noise"], rows)


def _run_filter(cfg, record, out_dir, base_dir, threads):
    point = build_point(cfg)
    opt = optimize_point(cfg, point, base_dir)
    target = build_target(cfg, point.system.basis)
    ref = _save_pulses(record, out_dir, "optimized", opt.result.final_pulses)
    harmonics = np.asarray(cfg.sweep.values, dtype=float)
    cutoffs = [harmonic_cutoff(point.grid, k) for k in harmonics]
    sweep = cutoff_sweep(opt.result.final_pulses, target, point.system, cutoffs,
                         threads, ErrorFunctional(cfg.gate.error))
    rows = []
    for k, wc, e, d in zip(harmonics, sweep.cutoffs, sweep.errors, sweep.drifts):
        rows.append({"harmonic": k, "omega_c": wc, "epsilon": e.epsilon,
                     "leakage_max": e.leakage_max, "boundary_drift": d})
    rows.append({"harmonic": "inf", "omega_c": "inf", "epsilon": sweep.reference.epsilon,
                 "leakage_max": sweep.reference.leakage_max, "boundary_drift": 0.0})
    record.points.extend(rows)
    record.extra.update({
        "epsilon_optimized": opt.error.epsilon,
        "epsilon_baseline": opt.baseline.epsilon,
        "iterations": opt.result.iterations_run,
        "terminated_by": opt.result.terminated_by.value,
        "error_history": opt.result.error_history,
        "pulse_file": ref,
        "frequency_convention": "angular; bin k <-> omega = 2 pi k / tau",
    })
    write_csv(out_dir / "curve.csv", CSV_COLUMNS["filter"], rows)


def _run_optimize(cfg, record, out_dir, base_dir, threads):
    point = build_point(cfg)
    opt = optimize_point(cfg, point, base_dir)
    ref = _save_pulses(record, out_dir, "optimized", opt.result.final_pulses)
    row = {"tau": point.grid.tau, "epsilon_baseline": opt.baseline.epsilon,
           "leakage_baseline": opt.baseline.leakage_max,
           "epsilon_optimized": opt.error.epsilon,
           "leakage_optimized": opt.error.leakage_max,
           "iterations": opt.result.iterations_run,
           "terminated_by": opt.result.terminated_by.value}
    record.points.append({**row, "pulse_file": ref,
                          "error_history": opt.result.error_history})
    write_csv(out_dir / "curve.csv", CSV_COLUMNS["single"], [row])


def _run_evaluate(cfg, record, out_dir, base_dir, threads):
    point = build_point(cfg)
    target = build_target(cfg, point.system.basis)
    functional = ErrorFunctional(cfg.gate.error)
    ev = cfg.evaluate
    source = ev.source if ev is not None else "scheme"
    if source == "propagator":
        U = np.load(_resolve_path(ev.path, base_dir))
        if U.shape != (point.system.dim, point.system.dim):
            raise ConfigurationError(f"propagator must be {point.system.dim}x{point.system.dim}")
        err = gate_error(project_computational(U, target), target, functional)
    else:
        if source == "pulses":
            pulses = read_pulses(_resolve_path(ev.path, base_dir))
        else:
            pulses = scheme_pulses(point.system, point.grid)
        err = evaluate(pulses, point.system, target, functional)
    row = {"tau": point.grid.tau, "epsilon": err.epsilon, "leakage_max": err.leakage_max}
    record.points.append({**row, "source": source})
    write_csv(out_dir / "curve.csv", CSV_COLUMNS["evaluate"], [row])


_RUNNERS = {
    Scenario.JJ_LEAKAGE: _run_leakage,
    Scenario.CC_LEAKAGE: _run_leakage,
    Scenario.JJ_NOISE: _run_noise,
    Scenario.CC_NOISE: _run_noise,
    Scenario.JJ_FILTER: _run_filter,
    Scenario.CC_FILTER: _run_filter,
    Scenario.OPTIMIZE_ONLY: _run_optimize,
    Scenario.EVALUATE_ONLY: _run_evaluate,
}


def run_scenario(cfg: ScenarioConfig, out_dir, threads: int = 1,
                 base_dir=None) -> RunRecord:
    """Execute ``cfg`` and write its outputs into ``out_dir``.

    Relative file references in the config resolve against ``base_dir``
    (default: the working directory). On failure a partial record with
    ``complete = false`` is written before the exception propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    record = RunRecord(cfg.scenario.value, dump_config(cfg))
    record.seed_lineage = {"seed": cfg.seed, "optimizer": "deterministic, no random streams"}
    t0 = time.perf_counter()
    try:
        _RUNNERS[cfg.scenario](cfg, record, out_dir, base_dir, max(1, threads))
    except BaseException as exc:
        record.wall_clock = time.perf_counter() - t0
        record.error = {"class": type(exc).__name__, "message": str(exc)}
        record.write(out_dir)
        raise
    record.wall_clock = time.perf_counter() - t0
    record.complete = True
    record.write(out_dir)
    return record
