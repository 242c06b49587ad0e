"""Compare the compiled and the numpy kernels on a Krotov-sized workload.

Usage::

    python3 benchmarks/bench_kernels.py [--steps 1000] [--repeat 5]

Prints the best-of-``repeat`` wall time per call for each backend and the
largest difference between their outputs.
"""

import argparse
import time

import numpy as np

from chargeqoc import kernels
from chargeqoc.control import ControlProblem, _backward_prime, _eig_stack
from chargeqoc.dynamics import TimeGrid, as_real_symmetric
from chargeqoc.schemes import jj_system, jj_target, modulated_guess, tau_jj


def workload(n_steps):
    system = jj_system(0.05)
    grid = TimeGrid(tau_jj(0.05), n_steps)
    problem = ControlProblem.jj_preset(system, grid)
    target = jj_target(system.basis)
    g = problem.channel_values(modulated_guess(problem, 0.8))
    H0, Hc = (as_real_symmetric(m) for m in problem.affine())
    w, V = _eig_stack(H0, Hc, g)
    psi0 = np.ascontiguousarray(target.embedding.T)
    chi_T = np.ascontiguousarray(target.targets.T) * 0.9
    chip = _backward_prime(w, V, chi_T, grid.dt)
    weight = np.full_like(g, 1e-3)
    lower = np.zeros(1)
    return dict(H0=H0, Hc=Hc, g=g, weight=weight, lower=lower, w=w, V=V,
                chip=chip, psi0=psi0, chi_T=chi_T, dt=grid.dt)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    d = workload(args.steps)
    backends = kernels.backends()
    results = {}
    for name, mod in backends.items():
        t_sweep, sweep = best_of(lambda: mod.krotov_sweep(
            d["H0"], d["Hc"], d["g"], d["weight"], d["lower"], d["w"], d["V"],
            d["chip"], d["psi0"], d["dt"]), args.repeat)
        t_chain, chain = best_of(lambda: mod.eigen_chain(
            d["w"], d["V"], d["chi_T"], d["dt"], True), args.repeat)
        results[name] = (sweep, chain)
        print(f"{name:>7}: krotov_sweep {t_sweep * 1e3:8.2f} ms   "
              f"eigen_chain {t_chain * 1e3:8.2f} ms")
    if len(results) == 2:
        (s_c, c_c), (s_p, c_p) = results["cython"], results["python"]
        print(f"max |g_cython - g_python|     = {np.max(np.abs(s_c[0] - s_p[0])):.2e}")
        print(f"max |psi_cython - psi_python| = {np.max(np.abs(s_c[3] - s_p[3])):.2e}")
        print(f"max |chain difference|        = {np.max(np.abs(c_c - c_p)):.2e}")
    else:
        print("compiled extension not built; only the numpy backend ran")


if __name__ == "__main__":
    main()
