import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

import oracles
from chargeqoc.dynamics import (ErrorFunctional, PulseSet, TimeGrid, as_real_symmetric,
                                evaluate, gate_error, project_computational, propagate,
                                read_pulses, step_exponential, write_pulses)
from chargeqoc.model import (ChargeBasis, ConfigurationError, CouplingSpec, QubitParams,
                             TwoQubitSystem, make_gate_target)
from chargeqoc.schemes import baseline_jj_gate


def jj_sys(basis=None, EJ=0.05):
    q = QubitParams(1.0, EJ, 0.5)
    return TwoQubitSystem(basis or ChargeBasis(), q, q, CouplingSpec("josephson", 0.05 * EJ, EJ))


def random_pulses(rng, grid, system):
    idle = system.idle_values()
    fields = {}
    for cid in ("EJ1", "EJ2", "EJJ"):
        fields[cid] = idle[cid] * (1 + 0.5 * rng.uniform(-1, 1, grid.n_steps))
    for cid in ("NG1", "NG2"):
        fields[cid] = idle[cid] + 0.1 * rng.uniform(-1, 1, grid.n_steps)
    return PulseSet(grid, fields)


def test_step_exponential_trivial_cases():
    H = np.diag([1.0, 2.0, 3.0])
    np.testing.assert_allclose(step_exponential(np.zeros((3, 3)), 0.7), np.eye(3))
    np.testing.assert_allclose(step_exponential(H, 0.0), np.eye(3))


def test_rabi_half_period_gives_sigma_x():
    EJ = 0.3
    H = -0.5 * EJ * np.array([[0, 1], [1, 0]])
    U = step_exponential(H, np.pi / EJ)
    sx = np.array([[0, 1], [1, 0]])
    phase = U[0, 1] / sx[0, 1]
    np.testing.assert_allclose(U, phase * sx, atol=1e-12)


@given(st.integers(2, 6), st.floats(0.01, 5.0), st.integers(0, 2 ** 31))
def test_step_exponential_matches_expm(n, dt, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = A + A.conj().T
    U = step_exponential(H, dt)
    np.testing.assert_allclose(U, expm(-1j * H * dt), atol=1e-10)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(n), atol=1e-12)


def test_constant_pulse_one_vs_many_steps():
    sys = jj_sys()
    tau = 50.0
    U1 = propagate(PulseSet(TimeGrid(tau, 2), {}), sys).U
    U100 = propagate(PulseSet(TimeGrid(tau, 100), {}), sys).U
    np.testing.assert_allclose(U1, U100, atol=1e-12)
    np.testing.assert_allclose(U1, expm(-1j * sys.hamiltonian() * tau), atol=1e-12)


def test_composition(rng):
    sys = jj_sys()
    grid = TimeGrid(40.0, 200)
    p = random_pulses(rng, grid, sys)
    half = TimeGrid(20.0, 100)
    first = PulseSet(half, {k: v[:100] for k, v in p.fields.items()})
    second = PulseSet(half, {k: v[100:] for k, v in p.fields.items()})
    U = propagate(p, sys).U
    np.testing.assert_allclose(U, propagate(second, sys).U @ propagate(first, sys).U,
                               atol=1e-12)


def test_propagate_matches_oracle(rng):
    sys = jj_sys()
    grid = TimeGrid(30.0, 25)
    p = random_pulses(rng, grid, sys)
    Hs = [oracles.hamiltonian(-1, 2, 1.0, 1.0, p.fields["EJ1"][j], p.fields["EJ2"][j],
                              p.fields["NG1"][j], p.fields["NG2"][j], 0.0025,
                              p.fields["EJJ"][j]) for j in range(grid.n_steps)]
    np.testing.assert_allclose(propagate(p, sys).U, oracles.propagate_piecewise(Hs, grid.dt),
                               atol=1e-11)


@given(st.sampled_from([(0, 1), (-1, 2), (-2, 3)]), st.integers(0, 2 ** 31))
def test_unitarity_random_pulses(win, seed):
    rng = np.random.default_rng(seed)
    sys = jj_sys(ChargeBasis(*win))
    p = random_pulses(rng, TimeGrid(100.0, 200), sys)
    U = propagate(p, sys).U
    assert np.max(np.abs(U.conj().T @ U - np.eye(sys.dim))) <= 1e-10


def test_nan_samples_rejected():
    sys = jj_sys()
    p = PulseSet(TimeGrid(1.0, 4), {"EJ1": [0.1, np.nan, 0.1, 0.1]})
    with pytest.raises(ValueError, match="NaN"):
        propagate(p, sys)


def test_pulse_set_validation():
    g = TimeGrid(1.0, 4)
    with pytest.raises(ConfigurationError):
        PulseSet(g, {"EJ3": [1, 2, 3, 4]})
    with pytest.raises(ConfigurationError):
        PulseSet(g, {"EJ1": [1, 2, 3]})
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 1)
    with pytest.raises(ValueError):
        PulseSet(g, {"EJ1": [0.1, -0.1, 0.1, 0.1]}).check_physical()


def test_projection_and_error_trivial():
    t = make_gate_target("G_cc", ChargeBasis())
    Ut = project_computational(np.eye(16), t)
    np.testing.assert_allclose(Ut, np.eye(4))
    assert gate_error(Ut, t).epsilon == pytest.approx(0.5, abs=1e-15)
    assert gate_error(t.matrix, t).epsilon == 0.0


def test_block_unitary_projects_to_gate():
    t = make_gate_target("G_JJ_minus", ChargeBasis(), flip_second=True)
    B = t.embedding
    U = B @ t.matrix @ B.conj().T + (np.eye(16) - B @ B.conj().T)
    Ut = project_computational(U, t)
    np.testing.assert_allclose(Ut, t.matrix, atol=1e-14)
    e = gate_error(Ut, t)
    assert e.epsilon == pytest.approx(0.0, abs=1e-15) and e.leakage_max == 0.0


@given(st.floats(0, 2 * np.pi))
def test_error_blind_to_global_phase(phi):
    t = make_gate_target("G_JJ_plus", ChargeBasis())
    assert gate_error(np.exp(1j * phi) * t.matrix, t).epsilon == pytest.approx(0, abs=1e-15)
    real = gate_error(np.exp(1j * phi) * t.matrix, t, ErrorFunctional.REAL).epsilon
    assert real == pytest.approx(min(max(1 - np.cos(phi), 0.0), 1.0), abs=1e-12)


@given(st.integers(0, 2 ** 31))
def test_projected_singular_values_bounded(seed):
    U = unitary_group.rvs(16, random_state=seed)
    t = make_gate_target("G_cc", ChargeBasis())
    s = np.linalg.svd(project_computational(U, t), compute_uv=False)
    assert np.all(s <= 1 + 1e-12)
    e = gate_error(project_computational(U, t), t)
    assert 0 <= e.epsilon <= 1 and 0 <= e.leakage_max <= 1


@given(st.integers(0, 2 ** 31))
def test_error_lipschitz(seed):
    rng = np.random.default_rng(seed)
    t = make_gate_target("G_cc", ChargeBasis())
    U1 = project_computational(unitary_group.rvs(16, random_state=rng), t)
    U2 = U1 + 0.01 * (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    d = abs(gate_error(U1, t).epsilon - gate_error(U2, t).epsilon)
    assert d <= np.linalg.norm(U1 - U2, "nuc") / 4 + 1e-14


def test_no_leakage_in_two_state_window(rng):
    sys = jj_sys(ChargeBasis.qubit_only())
    p = random_pulses(rng, TimeGrid(100.0, 100), sys)
    t = make_gate_target("G_JJ_plus", ChargeBasis.qubit_only())
    assert evaluate(p, sys, t).leakage_max == 0.0


def test_jj_baseline_matches_oracle():
    # oracle: elementwise Hamiltonian, one dense matrix exponential
    frozen = {0.03: 2.30418181885e-3, 0.05: 3.90467812538e-3, 0.10: 9.17362777205e-3}
    for ratio, value in frozen.items():
        assert oracles.jj_baseline(ratio) == pytest.approx(value, abs=1e-12)
        assert baseline_jj_gate(ratio).error.epsilon == pytest.approx(value, abs=1e-11)


def test_grid_refinement_of_piecewise_pulse(rng):
    sys = jj_sys()
    t = make_gate_target("G_JJ_minus", ChargeBasis(), flip_second=True)
    p = random_pulses(rng, TimeGrid(120.0, 1000), sys)
    e1 = evaluate(p, sys, t).epsilon
    e2 = evaluate(p.upsample(2), sys, t).epsilon
    assert abs(e1 - e2) <= 1e-6


def test_d4_vs_d6_baseline():
    for ratio in (0.05, 0.10):
        e4 = baseline_jj_gate(ratio, ChargeBasis()).error.epsilon
        e6 = baseline_jj_gate(ratio, ChargeBasis.extended()).error.epsilon
        assert abs(e4 - e6) < 1e-4


def test_pulse_file_round_trip(tmp_path, rng):
    grid = TimeGrid(np.pi * 7, 50)
    p = PulseSet(grid, {"EJ1": rng.normal(size=50), "NG2": rng.normal(size=50)})
    path = write_pulses(tmp_path / "p.csv", p)
    q = read_pulses(path)
    assert q.grid == grid
    for k in p.fields:
        np.testing.assert_array_equal(q.fields[k], p.fields[k])
    assert path.read_text().splitlines()[1] == "t_start,EJ1,NG2"


def test_real_symmetric_guard():
    with pytest.raises(ValueError):
        as_real_symmetric(np.array([[0, 1j], [-1j, 0]]))
    assert as_real_symmetric(np.eye(2, dtype=complex)).dtype == float
