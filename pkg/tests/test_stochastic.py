#!/usr/bin/env python3

###############################################################################
# Module Imports
###############################################################################

import math
import numpy as np
import pytest

from pynv import stochastic
from pynv.core import (
    AliasingError, ConfigError, DecayError, RegimeError, SpinParams)
from pynv.stochastic import Coherence, MonteCarloSpec, TelegraphConfig

###############################################################################

P = SpinParams()
W_ROOM = 64600.0


def formula(delta, w_down, w_up):
    u = w_up / w_down
    return 8 * u / (1 + u) ** 3 * 2 * math.pi * delta ** 2 / w_down


class TestConfig:

    @pytest.mark.parametrize('field,kwargs', [
        ('delta', {'delta': -1.0}),
        ('t_total', {'t_total': 0.0}),
        ('n_time_samples', {'n_time_samples': 1}),
        ('initial_site', {'initial_site': 'middle'}),
        ('n_batches', {'n_batches': 0}),
        ('seed', {'seed': -1})])
    def test_invariants(self, field, kwargs):
        base = dict(delta=1.0, w_down=50.0, w_up=30.0, t_total=2.0)
        base.update(kwargs)
        with pytest.raises(ConfigError) as error:
            TelegraphConfig(**base)
        assert error.value.field == field

    @pytest.mark.parametrize('field,kwargs', [
        ('seed', {'seed': -1}),
        ('n_trajectories', {'n_trajectories': 0}),
        ('n_bootstrap', {'n_bootstrap': -1})])
    def test_monte_carlo_invariants(self, field, kwargs):
        with pytest.raises(ConfigError) as error:
            MonteCarloSpec(**kwargs)
        assert error.value.field == field

    def test_frozen_rates_need_a_site(self):
        with pytest.raises(ConfigError):
            TelegraphConfig(1.0, 0.0, 0.0, 1.0)

    def test_stationary_occupancy(self):
        c = TelegraphConfig(1.0, 50.0, 30.0, 2.0)
        assert c.p_upper == pytest.approx(30 / 80)


class TestExchangeFormula:

    @pytest.mark.parametrize('w_down,w_up', [
        (77500.0, 77500.0), (64600.0, 53900.0), (100.0, 1.0)])
    def test_matches_motional_narrowing(self, w_down, w_up):
        assert stochastic.exchange_fwhm(775.0, w_down, w_up) == pytest.approx(
            formula(775.0, w_down, w_up), rel=1e-12)


class TestSimulation:

    @pytest.fixture(scope='class')
    def config(self):
        return TelegraphConfig(
            delta=1.0, w_down=50.0, w_up=30.0, t_total=2.0,
            n_trajectories=5000, seed=7, n_time_samples=256)

    def test_against_exact_coherence(self, config):
        mc = stochastic.simulate_coherence(config)
        exact = stochastic.exchange_coherence(config.times, 1.0, 50.0, 30.0)
        assert mc.g[0] == pytest.approx(1.0)
        assert np.abs(mc.g - exact.g).max() < 0.08

    def test_independent_of_workers(self, config):
        one = stochastic.simulate_coherence(config, workers=1)
        four = stochastic.simulate_coherence(config, workers=4)
        assert np.array_equal(one.g, four.g)
        assert one.upper_fraction == four.upper_fraction

    def test_seed_changes_result(self, config):
        a = stochastic.simulate_coherence(config._replace(n_trajectories=50))
        b = stochastic.simulate_coherence(
            config._replace(n_trajectories=50, seed=8))
        assert not np.array_equal(a.g, b.g)

    def test_upper_fraction(self, config):
        gt = stochastic.simulate_coherence(config)
        z = (gt.upper_fraction - config.p_upper) / gt.upper_fraction_stderr
        assert abs(z) < 5

    def test_forced_site_without_jumps(self):
        c = TelegraphConfig(2.0, 0.0, 0.0, 1.0, n_trajectories=3,
                            n_time_samples=11, initial_site='upper',
                            n_batches=1)
        gt = stochastic.simulate_coherence(c)
        assert np.allclose(gt.g, np.exp(2j * math.pi * 2.0 * c.times))
        assert gt.upper_fraction == 1.0

    def test_rejects_other_configs(self):
        with pytest.raises(ConfigError):
            stochastic.simulate_coherence({'delta': 1.0})


class TestLineshape:

    def test_exact_fast_exchange(self):
        delta, w = 775.0, 77500.0
        expected = formula(delta, w, w)
        times = np.linspace(0, 10 / expected, 2 ** 14)
        gt = stochastic.exchange_coherence(times, delta, w, w)
        line = stochastic.lineshape_from_coherence(gt, delta)
        assert line.fwhm == pytest.approx(expected, rel=0.02)
        assert abs(line.peak_center) < 1.0
        assert math.isnan(line.stderr_fwhm)

    def test_normalised(self):
        delta, w = 775.0, 77500.0
        times = np.linspace(0, 0.2, 2 ** 12)
        gt = stochastic.exchange_coherence(times, delta, w, w)
        line = stochastic.lineshape_from_coherence(gt, delta)
        step = line.freq_grid[1] - line.freq_grid[0]
        assert line.spectrum.sum() * step == pytest.approx(1.0)
        assert line.spectrum.min() >= 0

    def test_slow_exchange_resolves_sites(self):
        times = np.linspace(0, 20.0, 4096)
        gt = stochastic.exchange_coherence(times, 10.0, 0.5, 0.5)
        line = stochastic.lineshape_from_coherence(gt, 10.0)
        assert abs(line.peak_center) == pytest.approx(10.0, abs=0.05)

    def test_aliasing(self):
        times = np.arange(0, 10.0, 0.1)
        gt = Coherence(times, np.ones(times.size, dtype=complex))
        with pytest.raises(AliasingError):
            stochastic.lineshape_from_coherence(gt, delta=10.0)

    def test_not_decayed(self):
        times = np.linspace(0, 1.0, 64)
        gt = Coherence(times, np.ones(times.size, dtype=complex))
        with pytest.raises(DecayError):
            stochastic.lineshape_from_coherence(gt)

    def test_uneven_grid(self):
        times = np.array([0.0, 0.1, 0.3, 0.4])
        gt = Coherence(times, np.zeros(4, dtype=complex))
        with pytest.raises(DecayError):
            stochastic.lineshape_from_coherence(gt)


class TestNoiseFloor:

    TIMES = np.linspace(0, 10.0, 4096)

    def test_without_trajectory_count(self):
        g = np.exp(-math.pi * self.TIMES) + 0j
        assert stochastic._past_noise_floor(self.TIMES, g, None) is g

    def test_clean_decay_is_kept(self):
        g = np.exp((-math.pi + 2j * math.pi * 0.3) * self.TIMES)
        out = stochastic._past_noise_floor(self.TIMES, g, 2000)
        assert np.allclose(out, g, rtol=1e-6, atol=1e-12)

    def test_noisy_decay(self):
        n = 2000
        rng = np.random.default_rng(11)
        noise = (rng.standard_normal(self.TIMES.size) +
                 1j * rng.standard_normal(self.TIMES.size)) / math.sqrt(2 * n)
        g = np.exp(-math.pi * self.TIMES) + noise
        g[0] = 1.0
        gt = Coherence(self.TIMES, g, n)
        out = stochastic._past_noise_floor(self.TIMES, g, n)
        late = self.TIMES > 3.0
        assert np.abs(out[late]).max() < 1e-3
        line = stochastic.lineshape_from_coherence(gt, n_bootstrap=0)
        assert line.fwhm == pytest.approx(1.0, rel=0.02)

    @pytest.mark.slow
    def test_stderr_matches_seed_spread(self):
        expected = stochastic.exchange_fwhm(1.0, 40.0, 40.0)
        widths, errors = [], []
        for seed in range(8):
            spec = MonteCarloSpec(n_trajectories=5000, seed=seed,
                                  n_time_samples=2 ** 11, n_bootstrap=50)
            config = stochastic.default_config(1.0, 40.0, 40.0, spec)
            line = stochastic.lineshape_from_coherence(
                stochastic.simulate_coherence(config), n_bootstrap=50)
            widths.append(line.fwhm)
            errors.append(line.stderr_fwhm)
        spread = np.std(widths, ddof=1)
        assert abs(np.mean(widths) / expected - 1) < 0.05
        assert spread / expected < 0.06
        assert 0.4 < np.mean(errors) / spread < 2.5


class TestValidation:

    def test_regime(self):
        with pytest.raises(RegimeError):
            stochastic.validate_fast_exchange(P, 1000.0, 900.0)

    def test_quick_run(self):
        w_up = W_ROOM * math.exp(-0.18)
        spec = MonteCarloSpec(n_trajectories=5000, n_time_samples=2 ** 12,
                              n_bootstrap=20)
        report = stochastic.validate_fast_exchange(P, W_ROOM, w_up, spec)
        assert report['site_convention'] == '+/-D_perp'
        assert report['x'] == pytest.approx(0.18)
        assert report['fwhm_formula'] == pytest.approx(
            formula(775.0, W_ROOM, w_up))
        assert abs(report['relative_error']) < 0.15
        assert report['fwhm_mc_stderr'] > 0
        assert abs(report['occupancy_z']) < 5

    @pytest.mark.slow
    @pytest.mark.parametrize('x', [0.0, 0.18])
    def test_default_run(self, x):
        report = stochastic.validate_fast_exchange(
            P, W_ROOM, W_ROOM * math.exp(-x))
        assert abs(report['relative_error']) < 0.05
        low, high = report['relative_error_ci']
        assert low <= report['relative_error'] <= high
