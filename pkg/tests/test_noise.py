import numpy as np
import pytest
from scipy import stats

from chargeqoc.dynamics import TimeGrid, evaluate
from chargeqoc.model import ConfigurationError
from chargeqoc.noise import (FluctuatorEnsemble, NoiseConfig, autocorrelation, ensemble_psd,
                             fit_power_law, flip_probability, lorentzian_sum_psd,
                             noise_trajectories, noisy_gate_error, sample_ensemble,
                             stream_rng, trajectory)
from chargeqoc.schemes import baseline_jj_gate, jj_system, jj_target


def test_config_validation():
    for bad in (dict(A=-1.0, gamma_min=0.1, gamma_max=1.0),
                dict(A=1e-5, gamma_min=1.0, gamma_max=1.0),
                dict(A=1e-5, gamma_min=0.0, gamma_max=1.0),
                dict(A=1e-5, gamma_min=0.1, gamma_max=1.0, n_fluctuators=0)):
        with pytest.raises(ConfigurationError):
            NoiseConfig(**bad)


def test_default_window_is_centred_on_gate_frequency():
    cfg = NoiseConfig.for_gate(1e-5, 120.0)
    assert cfg.gamma_min == pytest.approx(0.1 / 120.0)
    assert cfg.gamma_max == pytest.approx(10.0 / 120.0)
    assert np.sqrt(cfg.gamma_min * cfg.gamma_max) == pytest.approx(1 / 120.0)


def test_rates_are_log_uniform():
    cfg = NoiseConfig(1e-5, 0.01, 1.0, n_fluctuators=1000, seed=3)
    ens = sample_ensemble(cfg, qubit=1)
    assert np.all((ens.gamma >= cfg.gamma_min) & (ens.gamma <= cfg.gamma_max))
    u = np.log(ens.gamma / cfg.gamma_min) / cfg.log_width
    assert stats.kstest(u, "uniform").pvalue > 0.01
    assert set(np.unique(ens.state0)) <= {-1.0, 1.0}


def test_ensembles_are_deterministic_and_seed_dependent():
    cfg = NoiseConfig(1e-5, 0.01, 1.0, seed=11)
    a, b = sample_ensemble(cfg, 1), sample_ensemble(cfg, 1)
    np.testing.assert_array_equal(a.gamma, b.gamma)
    np.testing.assert_array_equal(a.state0, b.state0)
    other = sample_ensemble(NoiseConfig(1e-5, 0.01, 1.0, seed=12), 1)
    assert not np.array_equal(a.gamma, other.gamma)
    assert not np.array_equal(a.gamma, sample_ensemble(cfg, 2).gamma)


def test_zero_amplitude_gives_zero_trajectory():
    cfg = NoiseConfig(0.0, 0.01, 1.0)
    ens = sample_ensemble(cfg, 1)
    assert ens.v == 0.0
    x = trajectory(ens, TimeGrid(100.0, 1000), stream_rng(0, "test"))
    np.testing.assert_array_equal(x, np.zeros(1000))


def test_rate_limit_is_enforced():
    ens = FluctuatorEnsemble(np.array([0.2]), 1.0, np.array([1.0]))
    with pytest.raises(ConfigurationError, match="gamma_max"):
        trajectory(ens, TimeGrid(1000.0, 1000), stream_rng(0, "test"))


def test_flip_probability_small_rate_limit():
    g = np.array([1e-6, 1e-3])
    np.testing.assert_allclose(flip_probability(g, 1.0), g, rtol=2e-3)
    assert flip_probability(np.array([1e6]), 1.0)[0] == pytest.approx(0.5)


def test_trajectory_takes_only_ensemble_values():
    ens = FluctuatorEnsemble(np.array([0.01, 0.02, 0.03]), 0.2, np.array([1.0, -1.0, 1.0]))
    x = trajectory(ens, TimeGrid(1000.0, 2000), stream_rng(1, "test"))
    assert x[0] == pytest.approx(0.1)
    allowed = 0.1 * np.array([-3, -1, 1, 3])
    assert np.all(np.min(np.abs(x[:, None] - allowed[None, :]), axis=1) < 1e-12)


def test_single_fluctuator_autocorrelation_decay():
    gamma, dt, n = 0.5, 0.1, 10_000
    ens = FluctuatorEnsemble(np.array([gamma]), 1.0, np.array([1.0]))
    rates = []
    for seed in range(10):
        x = trajectory(ens, TimeGrid(n * dt, n), stream_rng(seed, "test"))
        c = autocorrelation(x, 3)
        lags = np.arange(4) * dt
        rates.append(-np.polyfit(lags, np.log(c / c[0]), 1)[0])
    # mean over ten independent 1e4-sample records
    assert np.mean(rates) == pytest.approx(2 * gamma, rel=0.1)


def test_autocorrelation_variance_matches_telegraph():
    ens = FluctuatorEnsemble(np.array([0.05]), 0.4, np.array([-1.0]))
    x = trajectory(ens, TimeGrid(20_000.0, 200_000), stream_rng(5, "test"))
    assert autocorrelation(x, 0)[0] == pytest.approx(0.4 ** 2 / 4, rel=0.1)


@pytest.fixture(scope="module")
def psd():
    cfg = NoiseConfig(1e-5, 0.01, 1.0, n_fluctuators=1000, seed=2031)
    omega, S = ensemble_psd(cfg, TimeGrid(0.05 * 65536, 65536), n_traj=100)
    return cfg, omega[1:], S[1:]


@pytest.mark.slow
def test_ensemble_psd_follows_lorentzian_sum(psd):
    cfg, omega, S = psd
    sel = (omega > 3 * cfg.gamma_min) & (omega < cfg.gamma_max / 3)
    ratio = np.mean(S[sel]) / np.mean(lorentzian_sum_psd(omega[sel], cfg))
    assert ratio == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
def test_ensemble_psd_power_law_window(psd):
    cfg, omega, S = psd
    fit = fit_power_law(omega, S, 3 * cfg.gamma_min, cfg.gamma_max / 3)
    assert fit.exponent == pytest.approx(-1.0, abs=0.15)
    assert 0.5 <= fit.amplitude / cfg.A <= 2.0


def test_lorentzian_sum_has_one_over_f_plateau():
    cfg = NoiseConfig(1e-5, 1e-4, 1e2)
    omega = np.sqrt(cfg.gamma_min * cfg.gamma_max) * 2
    # deep inside the window the exact sum is A/omega
    assert lorentzian_sum_psd(np.array([omega]), cfg)[0] * omega == pytest.approx(
        cfg.A, rel=5e-3)


def test_qubits_are_uncorrelated():
    cfg = NoiseConfig(1e-5, 0.05, 1.0, seed=9)
    grid = TimeGrid(4000.0, 40_000)
    d1, d2 = noise_trajectories(cfg, grid, 0)
    r = np.corrcoef(d1, d2)[0, 1]
    # effective sample count reduced by the slowest correlation time
    n_eff = grid.tau * cfg.gamma_min
    assert abs(r) < 3 / np.sqrt(n_eff)


@pytest.fixture(scope="module")
def jj_gate():
    base = baseline_jj_gate(0.05)
    system = jj_system(0.05)
    return base.pulses, jj_target(system.basis), system


def test_zero_noise_matches_noiseless_error(jj_gate):
    pulses, target, system = jj_gate
    cfg = NoiseConfig.for_gate(0.0, pulses.grid.tau, realizations=5)
    rep = noisy_gate_error(pulses, target, system, cfg)
    assert rep.mean_epsilon == pytest.approx(evaluate(pulses, system, target).epsilon, abs=1e-14)
    assert rep.stderr == 0.0 and rep.M == 5


def test_noisy_error_is_deterministic_and_thread_independent(jj_gate):
    pulses, target, system = jj_gate
    cfg = NoiseConfig.for_gate(1e-5, pulses.grid.tau, realizations=6, seed=4)
    a = noisy_gate_error(pulses, target, system, cfg)
    b = noisy_gate_error(pulses, target, system, cfg, threads=3)
    np.testing.assert_array_equal(a.epsilons, b.epsilons)
    assert a.mean_epsilon == b.mean_epsilon
    assert a.stderr == pytest.approx(np.std(a.epsilons, ddof=1) / np.sqrt(6), rel=1e-12)


@pytest.mark.slow
def test_mean_error_grows_with_amplitude(jj_gate):
    pulses, target, system = jj_gate
    reports = [noisy_gate_error(pulses, target, system,
                                NoiseConfig.for_gate(A, pulses.grid.tau, realizations=200,
                                                     seed=1))
               for A in (1e-6, 1e-5, 1e-4)]
    for lo, hi in zip(reports, reports[1:]):
        assert hi.mean_epsilon + hi.stderr >= lo.mean_epsilon - lo.stderr
