import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from chargeqoc.control import ControlProblem, update_shape
from chargeqoc.dynamics import TimeGrid, evaluate
from chargeqoc.model import ChargeBasis, CouplingSpec, GateKind, QubitParams, TwoQubitSystem
from chargeqoc.schemes import (CC_EXPERIMENT, baseline_cc_gate, baseline_jj_gate, cc_system,
                               cc_target, jj_system, modulated_guess,
                               random_smooth_guess, scheme_pulses, tau_cc, tau_jj)

# frozen from oracles.jj_baseline / oracles.cc_baseline (expm of element-wise Hamiltonians)
JJ_BASELINE = {0.03: 2.30418181885e-3, 0.05: 3.90467812538e-3, 0.10: 9.17362777205e-3}
CC_BASELINE = 0.12939275673


@pytest.mark.parametrize("ratio", sorted(JJ_BASELINE))
def test_jj_baseline_matches_oracle(ratio):
    assert oracles.jj_baseline(ratio) == pytest.approx(JJ_BASELINE[ratio], rel=1e-9)
    assert baseline_jj_gate(ratio).error.epsilon == pytest.approx(JJ_BASELINE[ratio], rel=1e-9)


def test_cc_baseline_matches_oracle():
    assert oracles.cc_baseline() == pytest.approx(CC_BASELINE, rel=1e-9)
    assert baseline_cc_gate().error.epsilon == pytest.approx(CC_BASELINE, rel=1e-9)


def test_jj_baseline_sign_convention():
    # the other sign of the target phase is far off
    wrong = baseline_jj_gate(0.05, kind=GateKind.G_JJ_PLUS).error.epsilon
    assert wrong > 0.1
    assert oracles.jj_baseline(0.05, sign=+1) == pytest.approx(wrong, rel=1e-9)


def test_jj_baseline_grows_with_leakage():
    errs = [baseline_jj_gate(r).error.epsilon for r in (0.03, 0.05, 0.07, 0.10)]
    assert np.all(np.diff(errs) > 0)


def test_experimental_ratios():
    s = cc_system()
    assert s.q1.E_J_idle / s.q1.E_C == pytest.approx(CC_EXPERIMENT["E_J_over_E_C1"], rel=1e-3)
    assert s.q2.E_J_idle / s.q2.E_C == pytest.approx(CC_EXPERIMENT["E_J_over_E_C2"], rel=1e-3)
    assert s.coupling.E_cc == pytest.approx(CC_EXPERIMENT["E_cc_over_E_C1"])
    assert s.q1.E_J_idle / s.coupling.E_cc == pytest.approx(0.47)


def test_durations():
    assert tau_jj(0.05) == pytest.approx(0.97 * 2 * np.pi / 0.05)
    assert tau_cc(0.077691) == pytest.approx(1.18 * np.pi / 0.077691)


@given(st.floats(0.2, 5.0))
def test_uniform_energy_scaling_rescales_time(kappa):
    # every energy times kappa and tau divided by kappa leaves U unchanged
    s = cc_system()
    q1 = QubitParams(kappa * s.q1.E_C, kappa * s.q1.E_J_idle, s.q1.n_g_idle)
    q2 = QubitParams(kappa * s.q2.E_C, kappa * s.q2.E_J_idle, s.q2.n_g_idle)
    scaled = TwoQubitSystem(s.basis, q1, q2, CouplingSpec("capacitive", kappa * s.coupling.E_cc))
    tau = tau_cc(s.q1.E_J_idle)
    e0 = evaluate(scheme_pulses(s, TimeGrid(tau, 10)), s, cc_target(s.basis)).epsilon
    e1 = evaluate(scheme_pulses(scaled, TimeGrid(tau / kappa, 10)), scaled,
                  cc_target(s.basis)).epsilon
    assert e1 == pytest.approx(e0, abs=1e-10)


def test_uncoupled_qubits_give_product_evolution():
    basis = ChargeBasis()
    s = cc_system(working_point=(0.5, 0.5))
    q1, q2 = s.q1, s.q2
    H = TwoQubitSystem(basis, q1, q2, CouplingSpec("capacitive", 0.0)).hamiltonian()
    D = basis.D
    hop = np.eye(D, k=1) + np.eye(D, k=-1)
    h1 = np.diag(q1.E_C * (basis.charges - 0.5) ** 2) - 0.5 * q1.E_J_idle * hop
    h2 = np.diag(q2.E_C * (basis.charges - 0.5) ** 2) - 0.5 * q2.E_J_idle * hop
    np.testing.assert_allclose(H.real, np.kron(h1, np.eye(D)) + np.kron(np.eye(D), h2),
                               atol=1e-14)
    full = oracles.hamiltonian(-1, 2, q1.E_C, q2.E_C, q1.E_J_idle, q2.E_J_idle, 0.5, 0.5)
    np.testing.assert_allclose(H.real, full, atol=1e-14)


def test_jj_system_couplings():
    s = jj_system(0.05)
    assert s.has_jj
    assert s.coupling.E_JJ_idle == s.q1.E_J_idle == s.q2.E_J_idle == 0.05
    assert s.coupling.E_cc == pytest.approx(0.05 * 0.05)
    np.testing.assert_allclose(s.hamiltonian().real,
                               oracles.hamiltonian(-1, 2, 1, 1, .05, .05, .5, .5, .0025, .05),
                               atol=1e-15)


def test_modulated_guess_endpoints_and_shape():
    s = jj_system(0.05)
    problem = ControlProblem.jj_preset(s, TimeGrid(tau_jj(0.05), 200))
    flat = modulated_guess(problem)
    np.testing.assert_allclose(flat.fields["EJ1"], 0.05)
    mod = modulated_guess(problem, 0.8)
    g = mod.fields["EJ1"]
    assert g[0] == pytest.approx(0.05, abs=1e-15) and g[-1] == pytest.approx(0.05, abs=1e-15)
    assert np.all(g >= 0)
    np.testing.assert_array_equal(g, mod.fields["EJJ"])


def test_random_guess_respects_bounds(rng):
    s = jj_system(0.05)
    problem = ControlProblem.jj_preset(s, TimeGrid(tau_jj(0.05), 200))
    p = random_smooth_guess(problem, rng, amplitude=3.0)
    assert np.all(p.fields["EJ1"] >= 0)
    s_env = update_shape(problem.grid)
    assert np.all(p.fields["EJ1"][s_env == 0] == 0.05)
