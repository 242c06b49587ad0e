"""Command-line entry point ``chargeqoc``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 file-system error, 1 anything else. On failure one JSON line
``{"error_class": ..., "message": ...}`` is written to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import U64_MAX, ConfigError, Scenario, load_config, validate_config
from .dynamics import TimeGrid
from .model import ConfigurationError
from .noise import (NoiseConfig, ensemble_psd, fit_power_law, lorentzian_sum_psd)
from .runner import RunRecord, run_scenario, write_csv

EXIT_CODES = {"ConfigError": 2, "NumericalError": 3, "IOError": 4, "InternalError": 1}

SUBCOMMAND_SCENARIOS = {
    "optimize": {Scenario.OPTIMIZE_ONLY},
    "evaluate": {Scenario.EVALUATE_ONLY},
    "noise-sweep": {Scenario.JJ_NOISE, Scenario.CC_NOISE},
    "filter-sweep": {Scenario.JJ_FILTER, Scenario.CC_FILTER},
    "leakage-sweep": {Scenario.JJ_LEAKAGE, Scenario.CC_LEAKAGE},
}


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chargeqoc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*SUBCOMMAND_SCENARIOS, "psd"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=_seed, default=None, help="override the config seed")
        p.add_argument("--threads", type=_positive, default=1)
    v = sub.add_parser("validate")
    v.add_argument("--config", required=True, type=Path, nargs="+")
    return parser


def _classify(exc: BaseException) -> str:
    if isinstance(exc, (ConfigError, ConfigurationError)):
        return "ConfigError"
    if isinstance(exc, (FloatingPointError, np.linalg.LinAlgError, ArithmeticError)):
        return "NumericalError"
    if isinstance(exc, OSError):
        return "IOError"
    return "InternalError"


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    allowed = SUBCOMMAND_SCENARIOS[args.command]
    if cfg.scenario not in allowed:
        names = ", ".join(sorted(s.value for s in allowed))
        raise ConfigError(f"{args.command} runs {names}, config has {cfg.scenario.value}",
                          [{"field": "scenario", "message": "wrong subcommand"}])
    record = run_scenario(cfg, args.out, args.threads, base_dir=args.config.parent)
    print(json.dumps({"status": "ok", "scenario": record.scenario,
                      "out": str(args.out), "points": len(record.points)}))
    return 0


def cmd_psd(args) -> int:
    """Dump the averaged periodogram of simulated noise trajectories."""
    cfg = _load(args)
    if cfg.noise is None or cfg.noise.psd is None:
        raise ConfigError("psd needs a [noise.psd] section",
                          [{"field": "noise.psd", "message": "missing"}])
    p = cfg.noise.psd
    ncfg = NoiseConfig(A=p.A, gamma_min=p.gamma_min, gamma_max=p.gamma_max,
                       n_fluctuators=cfg.noise.n_fluctuators, seed=cfg.seed)
    grid = TimeGrid(p.dt * p.n_steps, p.n_steps)
    omega, psd = ensemble_psd(ncfg, grid, p.trajectories)
    omega, psd = omega[1:], psd[1:]
    centre = 2 * np.sqrt(p.gamma_min * p.gamma_max)
    fit = fit_power_law(omega, psd, centre / np.sqrt(10), centre * np.sqrt(10))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [{"omega": w, "psd": s, "psd_model": m, "A_over_omega": p.A / w}
            for w, s, m in zip(omega, psd, lorentzian_sum_psd(omega, ncfg))]
    write_csv(out / "psd.csv", ["omega", "psd", "psd_model", "A_over_omega"], rows)
    record = RunRecord("psd", cfg.model_dump(mode="json"), complete=True)
    record.extra = {"fit_exponent": fit.exponent, "fit_amplitude": fit.amplitude,
                    "fit_window": [centre / np.sqrt(10), centre * np.sqrt(10)],
                    "coupling_v": ncfg.coupling,
                    "convention": "one-sided, angular frequency"}
    record.seed_lineage = {"seed": cfg.seed,
                           "streams": "noise/qubit-1/realization-{0..trajectories-1}"}
    record.write(out)
    print(json.dumps({"status": "ok", "fit_exponent": fit.exponent,
                      "fit_amplitude_over_A": fit.amplitude / p.A if p.A else None}))
    return 0


def cmd_validate(args) -> int:
    reports = [validate_config(path) for path in args.config]
    for rep in reports:
        print(json.dumps(rep))
    return 0 if all(r["valid"] for r in reports) else EXIT_CODES["ConfigError"]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "psd":
            return cmd_psd(args)
        return cmd_run(args)
    except Exception as exc:
        cls = _classify(exc)
        payload = {"error_class": cls, "message": str(exc)}
        if isinstance(exc, ConfigError):
            payload["problems"] = exc.problems
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_CODES[cls]


if __name__ == "__main__":
    sys.exit(main())
